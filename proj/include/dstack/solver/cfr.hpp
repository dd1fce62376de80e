#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dstack/core/error.hpp"
#include "dstack/core/terminal.hpp"
#include "dstack/lookahead/tree.hpp"
#include "dstack/lookahead/value_fn.hpp"
#include "dstack/solver/regret_matching.hpp"
#include "dstack/solver/strategy.hpp"

namespace dstack {

struct SolveConfig {
  int iterations = 1000;
  int omitted = 0;  // iterations excluded from strategy and value averages
  DepthLimit depth_limit = DepthLimit::kFullGame;
  std::vector<ActionMenu> menus;  // indexed by the root's round; missing -> full width
  std::size_t max_nodes = 2'000'000;

  ActionMenu menu_for_round(int round) const {
    if (round < static_cast<int>(menus.size())) return menus[round];
    if (!menus.empty()) return menus.back();
    return ActionMenu::full_width();
  }

  void validate() const {
    if (iterations <= 0) throw Error("iterations must be positive");
    if (omitted < 0 || omitted >= iterations) throw Error("omitted iterations must lie in [0, iterations)");
  }
};

// Vectorized CFR over an explicit public tree: regret matching+ with regrets
// floored at zero, simultaneous updates, and uniformly weighted averages of
// the reach-weighted strategy and of every node's counterfactual values.
class CfrSolver {
 public:
  CfrSolver(TreePtr tree, const ValueFn* vf, std::shared_ptr<OutcomeCache> outcomes = nullptr)
      : tree_(std::move(tree)), vf_(vf), n_(tree_->game().num_hands()) {
    if (!tree_->leaves().empty() && vf_ == nullptr)
      throw Error("a depth-limited tree needs a value function");
    if (!outcomes) outcomes = std::make_shared<OutcomeCache>(tree_->game_ptr());
    const int nn = tree_->size();
    offset_.assign(nn, -1);
    valid_.resize(nn);
    std::size_t table = 0;
    for (int i = 0; i < nn; ++i) {
      const TreeNode& t = tree_->node(i);
      valid_[i] = tree_->game().hands().board_mask(mask_of(t.state.board));
      if (t.kind == NodeKind::kDecision) {
        offset_[i] = static_cast<std::ptrdiff_t>(table);
        table += t.actions.size() * static_cast<std::size_t>(n_);
      }
    }
    for (int t : tree_->terminals()) outcome_.emplace(t, outcomes->get(tree_->node(t).state.board));
    regrets_.assign(table, 0.0);
    sigma_.assign(table, 0.0);
    ssum_.assign(table, 0.0);
    for (int p = 0; p < 2; ++p) {
      range_[p].assign(static_cast<std::size_t>(nn) * n_, 0.0);
      value_[p].assign(static_cast<std::size_t>(nn) * n_, 0.0);
      vsum_[p].assign(static_cast<std::size_t>(nn) * n_, 0.0);
      rsum_[p].assign(static_cast<std::size_t>(nn) * n_, 0.0);
    }
  }

  const PublicTree& tree() const { return *tree_; }
  const TreePtr& tree_ptr() const { return tree_; }
  int num_hands() const { return n_; }
  int accumulated() const { return accumulated_; }
  long long iterations_run() const { return iterations_; }

  // Root reach vector for one player; entries for board-blocked hands are
  // dropped.
  void set_range(int player, std::span<const double> r) {
    if (static_cast<int>(r.size()) != n_) throw Error("range has the wrong size");
    double* dst = range_[player].data();
    for (int h = 0; h < n_; ++h) dst[h] = r[h] * valid_[0][h];
  }

  void set_ranges(std::span<const double> r1, std::span<const double> r2) {
    set_range(0, r1);
    set_range(1, r2);
  }

  // One full iteration; averages include it when `accumulate` is true.
  void iterate(bool accumulate) {
    regret_strategy();
    pass();
    update_regrets();
    if (accumulate) accumulate_averages();
    ++iterations_;
  }

  // Runs `cfg.iterations` iterations, averaging those after `cfg.omitted`.
  void solve(int iterations, int omitted) {
    for (int t = 1; t <= iterations; ++t) iterate(t > omitted);
  }

  // Values of a fixed policy (no learning state is touched).
  void evaluate_policy(const Policy& policy) {
    std::vector<double> buf;
    for (int i = 0; i < tree_->size(); ++i) {
      const TreeNode& t = tree_->node(i);
      if (t.kind != NodeKind::kDecision) continue;
      policy.action_probs(t.state, t.actions, buf);
      std::copy(buf.begin(), buf.end(), sigma_.begin() + offset_[i]);
    }
    pass();
  }

  // Values of the current iteration (after iterate or evaluate_policy).
  std::span<const double> values(int player, int node) const {
    return {value_[player].data() + static_cast<std::size_t>(node) * n_, static_cast<std::size_t>(n_)};
  }
  std::span<const double> reach(int player, int node) const {
    return {range_[player].data() + static_cast<std::size_t>(node) * n_, static_cast<std::size_t>(n_)};
  }
  // Current-iteration strategy at a decision node (hands x actions).
  std::span<const double> current_strategy(int node) const {
    const std::size_t na = tree_->node(node).actions.size();
    return {sigma_.data() + offset_[node], na * n_};
  }
  std::span<const double> regrets(int node) const {
    const std::size_t na = tree_->node(node).actions.size();
    return {regrets_.data() + offset_[node], na * n_};
  }
  const std::vector<double>& regret_table() const { return regrets_; }

  // Values averaged over the accumulated iterations.
  std::vector<double> average_values(int player, int node) const {
    std::vector<double> out(n_, 0.0);
    if (accumulated_ == 0) return out;
    const double* src = vsum_[player].data() + static_cast<std::size_t>(node) * n_;
    for (int h = 0; h < n_; ++h) out[h] = src[h] / accumulated_;
    return out;
  }

  // Reach averaged over the accumulated iterations.
  std::vector<double> average_reach(int player, int node) const {
    std::vector<double> out(n_, 0.0);
    if (accumulated_ == 0) return out;
    const double* src = rsum_[player].data() + static_cast<std::size_t>(node) * n_;
    for (int h = 0; h < n_; ++h) out[h] = src[h] / accumulated_;
    return out;
  }

  // Counterfactual values of a best response by `player` to the average
  // strategy of the other player, inside this tree. Depth-limit leaves are
  // valued by the value function at the average-strategy ranges. Overwrites
  // the current-iteration buffers; returns values for every node (nodes x
  // hands).
  std::vector<double> best_response_values(int player) {
    for (int i = 0; i < tree_->size(); ++i)
      if (tree_->node(i).kind == NodeKind::kDecision) {
        const auto avg = average_strategy(i);
        std::copy(avg.begin(), avg.end(), sigma_.begin() + offset_[i]);
      }
    pass(player);
    return value_[player];
  }

  // Reach-weighted average strategy at a decision node; hands that never
  // reached it play uniformly.
  std::vector<double> average_strategy(int node) const {
    const std::size_t na = tree_->node(node).actions.size();
    std::vector<double> out(na * n_);
    const double* src = ssum_.data() + offset_[node];
    for (int h = 0; h < n_; ++h) {
      double tot = 0;
      for (std::size_t a = 0; a < na; ++a) tot += src[h * na + a];
      for (std::size_t a = 0; a < na; ++a)
        out[h * na + a] = tot > 0 ? src[h * na + a] / tot : 1.0 / static_cast<double>(na);
    }
    return out;
  }

  StrategyProfile average_profile() const {
    StrategyProfile p(tree_->game_ptr());
    for (int i = 0; i < tree_->size(); ++i) {
      const TreeNode& t = tree_->node(i);
      if (t.kind == NodeKind::kDecision) p.set(t.state, t.actions, average_strategy(i));
    }
    return p;
  }

 private:
  double* row(std::vector<double>* arr, int p, int node) {
    return arr[p].data() + static_cast<std::size_t>(node) * n_;
  }

  void regret_strategy() {
    for (int i = 0; i < tree_->size(); ++i) {
      const TreeNode& t = tree_->node(i);
      if (t.kind != NodeKind::kDecision) continue;
      const std::size_t na = t.actions.size();
      for (int h = 0; h < n_; ++h) {
        const std::size_t o = offset_[i] + h * na;
        regret_matching_plus(std::span<const double>(regrets_.data() + o, na), std::span<double>(sigma_.data() + o, na));
      }
    }
  }

  // Values for the current sigma; `br_player` (if >= 0) maximizes over
  // actions instead of following sigma.
  void pass(int br_player = -1) {
    const int nn = tree_->size();
    const GameSpec& g = tree_->game();
    // Top-down reach.
    for (int i = 0; i < nn; ++i) {
      const TreeNode& t = tree_->node(i);
      if (t.kind == NodeKind::kDecision) {
        const int p = t.state.actor, o = 1 - p;
        const std::size_t na = t.actions.size();
        const double* rp = row(range_, p, i);
        const double* ro = row(range_, o, i);
        for (std::size_t a = 0; a < na; ++a) {
          const int c = t.children[a];
          double* cp = row(range_, p, c);
          const double* s = sigma_.data() + offset_[i] + a;
          for (int h = 0; h < n_; ++h) cp[h] = rp[h] * s[h * na];
          std::copy(ro, ro + n_, row(range_, o, c));
        }
      } else if (t.kind == NodeKind::kChance) {
        for (int c : t.children) {
          const std::vector<double>& m = valid_[c];
          for (int p = 0; p < 2; ++p) {
            const double* src = row(range_, p, i);
            double* dst = row(range_, p, c);
            for (int h = 0; h < n_; ++h) dst[h] = src[h] * m[h];
          }
        }
      }
    }
    // Leaves.
    for (int i : tree_->terminals()) {
      const TreeNode& t = tree_->node(i);
      terminal_values(t.state, g, *outcome_.at(i), reach(0, i), reach(1, i),
                      std::span<double>(row(value_, 0, i), n_), std::span<double>(row(value_, 1, i), n_));
    }
    for (int i : tree_->leaves()) {
      const TreeNode& t = tree_->node(i);
      const CfvPair v = vf_->evaluate(t.state, reach(0, i), reach(1, i), t.state.pot());
      const std::vector<double>& m = valid_[i];
      double* v1 = row(value_, 0, i);
      double* v2 = row(value_, 1, i);
      for (int h = 0; h < n_; ++h) {
        v1[h] = v.v1[h] * m[h];
        v2[h] = v.v2[h] * m[h];
      }
    }
    // Bottom-up values.
    for (int i = nn - 1; i >= 0; --i) {
      const TreeNode& t = tree_->node(i);
      if (t.kind == NodeKind::kDecision) {
        const int p = t.state.actor, o = 1 - p;
        const std::size_t na = t.actions.size();
        double* vp = row(value_, p, i);
        double* vo = row(value_, o, i);
        std::fill(vp, vp + n_, 0.0);
        std::fill(vo, vo + n_, 0.0);
        for (std::size_t a = 0; a < na; ++a) {
          const int c = t.children[a];
          const double* cp = row(value_, p, c);
          const double* co = row(value_, o, c);
          const double* s = sigma_.data() + offset_[i] + a;
          if (p == br_player) {
            for (int h = 0; h < n_; ++h) {
              vp[h] = a == 0 ? cp[h] : std::max(vp[h], cp[h]);
              vo[h] += co[h];
            }
          } else {
            for (int h = 0; h < n_; ++h) {
              vp[h] += s[h * na] * cp[h];
              vo[h] += co[h];
            }
          }
        }
      } else if (t.kind == NodeKind::kChance) {
        for (int p = 0; p < 2; ++p) {
          double* v = row(value_, p, i);
          std::fill(v, v + n_, 0.0);
          for (int c : t.children) {
            const double* cv = row(value_, p, c);
            for (int h = 0; h < n_; ++h) v[h] += cv[h];
          }
          for (int h = 0; h < n_; ++h) v[h] *= t.chance_weight;
        }
      }
    }
  }

  void update_regrets() {
    for (int i = 0; i < tree_->size(); ++i) {
      const TreeNode& t = tree_->node(i);
      if (t.kind != NodeKind::kDecision) continue;
      const int p = t.state.actor;
      const std::size_t na = t.actions.size();
      const double* v = row(value_, p, i);
      for (std::size_t a = 0; a < na; ++a) {
        const double* cv = row(value_, p, t.children[a]);
        double* r = regrets_.data() + offset_[i] + a;
        for (int h = 0; h < n_; ++h) {
          const double x = r[h * na] + cv[h] - v[h];
          r[h * na] = x > 0 ? x : 0;
        }
      }
    }
  }

  void accumulate_averages() {
    ++accumulated_;
    for (int i = 0; i < tree_->size(); ++i) {
      const TreeNode& t = tree_->node(i);
      if (t.kind == NodeKind::kDecision) {
        const int p = t.state.actor;
        const std::size_t na = t.actions.size();
        const double* rp = row(range_, p, i);
        const double* s = sigma_.data() + offset_[i];
        double* dst = ssum_.data() + offset_[i];
        for (int h = 0; h < n_; ++h)
          for (std::size_t a = 0; a < na; ++a) dst[h * na + a] += rp[h] * s[h * na + a];
      }
    }
    for (int p = 0; p < 2; ++p)
      for (std::size_t k = 0; k < vsum_[p].size(); ++k) {
        vsum_[p][k] += value_[p][k];
        rsum_[p][k] += range_[p][k];
      }
  }

  TreePtr tree_;
  const ValueFn* vf_;
  int n_;
  std::vector<std::ptrdiff_t> offset_;
  std::vector<std::vector<double>> valid_;
  std::unordered_map<int, std::shared_ptr<const BoardOutcomes>> outcome_;
  std::vector<double> regrets_, sigma_, ssum_;
  std::vector<double> range_[2], value_[2], vsum_[2], rsum_[2];
  int accumulated_ = 0;
  long long iterations_ = 0;
};

struct SolveResult {
  std::shared_ptr<CfrSolver> solver;
  StrategyProfile profile;
  CfvVector v1, v2;  // average root counterfactual values
};

inline SolveResult cfr_solve(GamePtr game, const PublicState& root, std::span<const double> r1,
                             std::span<const double> r2, const SolveConfig& cfg, const ValueFn* vf) {
  cfg.validate();
  if (cfg.depth_limit == DepthLimit::kEndOfRound && vf == nullptr)
    throw Error("a depth-limited solve needs a value function");
  auto tree = build_tree(game, root, cfg.menu_for_round(root.round), cfg.depth_limit, cfg.max_nodes);
  auto solver = std::make_shared<CfrSolver>(tree, vf);
  solver->set_ranges(r1, r2);
  solver->solve(cfg.iterations, cfg.omitted);
  SolveResult res{solver, solver->average_profile(), solver->average_values(0, 0), solver->average_values(1, 0)};
  return res;
}

// Uniform root ranges over all private hands.
inline Range uniform_range(const GameSpec& g) {
  return Range(g.num_hands(), 1.0 / static_cast<double>(g.num_hands()));
}

// Uniform range over the hands not blocked by `board`, normalized to 1.
inline Range uniform_range(const GameSpec& g, std::span<const Card> board) {
  Range r = g.hands().board_mask(mask_of(board));
  double s = 0;
  for (double x : r) s += x;
  for (double& x : r) x /= s;
  return r;
}

// Expected value for seat 0 of the whole game given root CFVs computed with
// uniform 1/N ranges.
inline double game_value(const GameSpec& g, std::span<const double> r1, std::span<const double> v1,
                         int board_cards = 0) {
  double s = 0;
  for (std::size_t h = 0; h < r1.size(); ++h) s += r1[h] * v1[h];
  return s * g.deal_normalizer(board_cards);
}

// Root values of a fixed policy on a full tree.
inline CfvPair values_pass(GamePtr game, const PublicState& root, const Policy& policy, std::span<const double> r1,
                           std::span<const double> r2, const ActionMenu& menu, DepthLimit limit,
                           const ValueFn* vf) {
  auto tree = build_tree(game, root, menu, limit);
  CfrSolver s(tree, vf);
  s.set_ranges(r1, r2);
  s.evaluate_policy(policy);
  auto v1 = s.values(0, 0), v2 = s.values(1, 0);
  return {CfvVector(v1.begin(), v1.end()), CfvVector(v2.begin(), v2.end())};
}

}  // namespace dstack
