#pragma once

#include <charconv>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/resolving/resolve.hpp"
#include "dstack/solver/strategy.hpp"

namespace dstack {

// Drives re-solving for one agent configuration: initial contexts, the
// first-round cache and warm starts. Contexts themselves are plain values
// owned by the caller (one per seat and hand).
class ContinualResolver {
 public:
  ContinualResolver(GamePtr game, ResolveConfig cfg, ValueFnPtr vf,
                    std::shared_ptr<ResolveCache> cache = nullptr)
      : game_(std::move(game)), cfg_(std::move(cfg)), vf_(std::move(vf)), cache_(std::move(cache)) {
    if (!cache_ && cfg_.cache_first_round) cache_ = std::make_shared<ResolveCache>();
  }

  const GamePtr& game() const { return game_; }
  const ResolveConfig& config() const { return cfg_; }
  const std::shared_ptr<ResolveCache>& cache() const { return cache_; }
  long long solver_iterations() const { return solver_iterations_; }

  ResolveContext start(int seat) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!initial_[seat]) initial_[seat] = std::make_shared<ResolveContext>(initial_context(game_, seat, cfg_, vf_.get()));
    return *initial_[seat];
  }

  std::shared_ptr<const ResolveOutput> resolve(const ResolveContext& ctx) {
    const bool cacheable = cfg_.cache_first_round && cache_ && ctx.current.round == 0;
    std::string key;
    if (cacheable) {
      key = std::to_string(ctx.seat) + ":" + ctx.current.betting_string();
      if (auto hit = cache_->get(key)) return hit;
    }
    const auto warm = warm_start_for(ctx, cfg_, *game_);
    auto out = resolve_lookahead(game_, ctx, cfg_, vf_.get(), warm ? &*warm : nullptr);
    solver_iterations_ += out->iterations;
    if (cacheable) cache_->put(key, out);
    return out;
  }

 private:
  GamePtr game_;
  ResolveConfig cfg_;
  ValueFnPtr vf_;
  std::shared_ptr<ResolveCache> cache_;
  std::mutex mu_;
  std::shared_ptr<ResolveContext> initial_[2];
  long long solver_iterations_ = 0;
};

// Induced strategy of a continual re-solving agent in `seat`, obtained by
// re-solving at every public state the agent can reach. The context depends
// only on the public history, so one re-solve covers all private hands.
// Branches the agent never reaches are left out (the profile then plays
// uniformly there, which cannot affect a best response).
inline void extract_strategy(ContinualResolver& r, int seat, StrategyProfile& out,
                             const std::function<void(const PublicState&)>& progress = {}) {
  const GameSpec& g = *r.game();
  std::function<void(const ResolveContext&)> walk = [&](const ResolveContext& ctx) {
    const PublicState& s = ctx.current;
    if (s.is_terminal()) return;
    if (s.is_chance()) {
      const int k = cards_to_deal(s, g);
      for (const auto& d : card_subsets(g.deck().size(), mask_of(s.board), k)) {
        ResolveContext c = update_chance(ctx, d, g);
        if (c.scale <= 0) continue;
        walk(c);
      }
      return;
    }
    if (s.actor != seat) {
      for (const Action& a : legal_actions(s, g)) walk(update_opponent_action(ctx, a, g));
      return;
    }
    if (progress) progress(s);
    auto res = r.resolve(ctx);
    out.set(s, res->actions, res->strategy);
    for (const Action& a : res->actions) {
      ResolveContext c = update_own_action(ctx, a, res, g);
      if (c.scale <= 0) continue;
      walk(c);
    }
  };
  walk(r.start(seat));
}

// One re-solving decision, for golden traces and debugging.
struct TraceRecord {
  std::string key;
  Range r1;
  CfvVector v2;
  Action action;
  std::vector<double> sigma;  // root average strategy for the agent's hand

  std::string str() const {
    std::ostringstream os;
    auto vec = [&](const char* name, const std::vector<double>& v) {
      os << ' ' << name << '=';
      for (std::size_t i = 0; i < v.size(); ++i) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, v[i]);
        os << (i ? "," : "") << std::string(buf, res.ptr);
      }
    };
    os << "key=" << key << " action=" << action.str();
    vec("r1", r1);
    vec("v2", v2);
    vec("sigma", sigma);
    return os.str();
  }

  static TraceRecord parse(const std::string& line) {
    TraceRecord t;
    std::istringstream in(line);
    std::string tok;
    auto vec = [](const std::string& s) {
      std::vector<double> v;
      std::istringstream vs(s);
      std::string x;
      while (std::getline(vs, x, ',')) v.push_back(std::stod(x));
      return v;
    };
    while (in >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw Error("bad trace token '" + tok + "'");
      const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
      if (k == "key") t.key = v;
      else if (k == "action") t.action = Action::parse(v);
      else if (k == "r1") t.r1 = vec(v);
      else if (k == "v2") t.v2 = vec(v);
      else if (k == "sigma") t.sigma = vec(v);
      else throw Error("bad trace field '" + k + "'");
    }
    return t;
  }
};

}  // namespace dstack
