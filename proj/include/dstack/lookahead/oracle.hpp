#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "dstack/lookahead/value_fn.hpp"
#include "dstack/solver/cfr.hpp"

namespace dstack {

struct OracleConfig {
  int iterations = 1000;
  int omitted = 0;
  std::vector<ActionMenu> menus;  // by round; empty -> full width
  std::size_t max_nodes = 200'000;
};

// Value function that solves the remaining game below the queried state with
// CFR and returns the average root counterfactual values. Trees are cached by
// public state key.
class OracleValueFn : public ValueFn {
 public:
  OracleValueFn(GamePtr game, OracleConfig cfg)
      : game_(std::move(game)), cfg_(std::move(cfg)), outcomes_(std::make_shared<OutcomeCache>(game_)) {
    if (cfg_.iterations <= 0 || cfg_.omitted < 0 || cfg_.omitted >= cfg_.iterations)
      throw Error("bad oracle iteration settings");
  }

  const OracleConfig& config() const { return cfg_; }

  CfvPair evaluate(const PublicState& s, std::span<const double> r1, std::span<const double> r2,
                   Chips pot) const override {
    if (pot != s.pot()) throw Error("pot does not match the state");
    const CardMask bm = mask_of(s.board);
    const HandSpace& hs = game_->hands();
    for (int h = 0; h < hs.size(); ++h)
      if ((hs.mask(h) & bm) && (r1[h] != 0 || r2[h] != 0)) throw Error("range puts mass on a board-blocked hand");
    CfrSolver solver(tree_for(s), nullptr, outcomes_);
    solver.set_ranges(r1, r2);
    solver.solve(cfg_.iterations, cfg_.omitted);
    return {solver.average_values(0, 0), solver.average_values(1, 0)};
  }

  TreePtr tree_for(const PublicState& s) const {
    const std::string key = s.key(game_->deck());
    std::lock_guard<std::mutex> lock(mu_);
    auto it = trees_.find(key);
    if (it != trees_.end()) return it->second;
    const ActionMenu menu = s.round < static_cast<int>(cfg_.menus.size())
                                ? cfg_.menus[s.round]
                                : (cfg_.menus.empty() ? ActionMenu::full_width() : cfg_.menus.back());
    auto tree = build_tree(game_, s, menu, DepthLimit::kFullGame, cfg_.max_nodes);
    trees_.emplace(key, tree);
    return tree;
  }

 private:
  GamePtr game_;
  OracleConfig cfg_;
  std::shared_ptr<OutcomeCache> outcomes_;
  mutable std::mutex mu_;
  mutable std::map<std::string, TreePtr> trees_;
};

inline ValueFnPtr oracle_valuefn(GamePtr game, OracleConfig cfg) {
  return std::make_shared<OracleValueFn>(std::move(game), std::move(cfg));
}

}  // namespace dstack
