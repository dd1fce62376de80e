#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/core/error.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/lookahead/value_fn.hpp"
#include "dstack/resolving/gadget.hpp"
#include "dstack/solver/cfr.hpp"

namespace dstack {

struct ResolveConfig {
  int iterations = 1000;
  int omitted = 0;                 // applied to strategy, value and gadget averages alike
  std::vector<ActionMenu> menus;   // by round; empty -> full width
  bool best_response_values = false;  // constraint values from a best response instead of self-play
  bool warm_start = true;
  double warm_b = 0.9;
  bool cache_first_round = true;
  bool depth_limited = true;  // false: every lookahead runs to the end of the game
  std::size_t max_nodes = 2'000'000;

  SolveConfig solve_config(int round) const {
    SolveConfig c;
    c.iterations = iterations;
    c.omitted = omitted;
    c.menus = menus;
    c.max_nodes = max_nodes;
    (void)round;
    return c;
  }

  // Stable text used for cache keys and manifests.
  std::string str() const {
    std::ostringstream os;
    os << "iters=" << iterations << " omitted=" << omitted << " br=" << best_response_values
       << " warm=" << warm_start << " b=" << warm_b << " depth_limited=" << depth_limited << " menus=";
    for (const auto& m : menus) os << '[' << m.str() << ']';
    return os.str();
  }
};

enum class WarmMode { kConservative, kAggressive };

struct WarmStart {
  WarmMode mode = WarmMode::kConservative;
  double b = 0.9;
  Range estimate;  // opponent range estimate, any positive scale
};

struct ResolveOutput;

// The agent's state between decisions: its own range (normalized at each
// re-solve root) and the opponent's counterfactual value constraints.
struct ResolveContext {
  int seat = 0;
  Range r1;
  CfvVector v2;
  PublicState current;
  // Last re-solve and the reach normalizer applied since, used to read
  // stored values when a chance card arrives.
  std::shared_ptr<const ResolveOutput> last;
  double scale = 1.0;
  bool round_started = true;  // no own decision yet in the current round
};

struct ResolveOutput {
  int seat = 0;
  std::shared_ptr<CfrSolver> solver;
  std::vector<Action> actions;   // root actions
  std::vector<double> strategy;  // average root strategy, hands x actions
  std::vector<double> opp_values;  // opponent constraint values for every node (nodes x hands)
  std::vector<double> entry_range;  // average gadget entry range r2
  std::vector<double> gadget_values;  // average per-hand gadget value
  long long iterations = 0;  // solver iterations actually run (0 on a cache hit)

  const PublicTree& tree() const { return solver->tree(); }
  std::span<const double> opp_values_at(int node) const {
    const std::size_t n = static_cast<std::size_t>(solver->num_hands());
    return {opp_values.data() + node * n, n};
  }
  double gadget_value() const {
    double s = 0;
    for (double v : gadget_values) s += v;
    return s;
  }
};

namespace detail {

inline DepthLimit resolve_depth(const GameSpec& g, const PublicState& s, bool depth_limited = true) {
  return !depth_limited || s.round + 1 >= g.num_rounds() ? DepthLimit::kFullGame : DepthLimit::kEndOfRound;
}

inline double normalize(std::vector<double>& r) {
  double s = 0;
  for (double x : r) s += x;
  if (s > 0)
    for (double& x : r) x /= s;
  return s;
}

}  // namespace detail

// Re-solves the lookahead rooted at ctx.current through the gadget game.
inline std::shared_ptr<ResolveOutput> resolve_lookahead(GamePtr game, const ResolveContext& ctx,
                                                        const ResolveConfig& cfg, const ValueFn* vf,
                                                        const WarmStart* warm = nullptr) {
  if (cfg.iterations <= 0 || cfg.omitted < 0 || cfg.omitted >= cfg.iterations)
    throw Error("bad re-solve iteration settings");
  const PublicState& s = ctx.current;
  if (!s.is_decision() || s.actor != ctx.seat) throw InvalidState("re-solve requires the agent to act");
  const GameSpec& g = *game;
  const int n = g.num_hands(), me = ctx.seat, opp = 1 - me;
  const DepthLimit limit = detail::resolve_depth(g, s, cfg.depth_limited);
  const SolveConfig sc = cfg.solve_config(s.round);
  auto tree = build_tree(game, s, sc.menu_for_round(s.round), limit, cfg.max_nodes);
  auto out = std::make_shared<ResolveOutput>();
  out->seat = me;
  out->solver = std::make_shared<CfrSolver>(tree, limit == DepthLimit::kFullGame ? nullptr : vf);
  CfrSolver& solver = *out->solver;
  out->actions = tree->root().actions;

  const std::vector<double> valid = g.hands().board_mask(mask_of(s.board));
  std::vector<double> est;
  if (warm && !warm->estimate.empty()) {
    if (warm->b < 0 || warm->b > 1) throw Error("warm-start weight outside [0, 1]");
    est.assign(n, 0.0);
    double tot = 0, cnt = 0;
    for (int h = 0; h < n; ++h) {
      est[h] = warm->estimate[h] * valid[h];
      tot += est[h];
      cnt += valid[h];
    }
    if (tot > 0)
      for (double& x : est) x *= cnt / tot;  // uniform maps to 1 per hand
    else
      est.clear();
  }

  solver.set_range(me, ctx.r1);
  GadgetState gadget(n);
  std::vector<double> r2(n), vg, r2sum(n, 0.0), vgsum(n, 0.0);
  int acc = 0;
  for (int t = 1; t <= cfg.iterations; ++t) {
    const std::vector<double> f = gadget.follow_probability();
    for (int h = 0; h < n; ++h) {
      double x = f[h];
      if (!est.empty()) {
        x = warm->mode == WarmMode::kConservative ? f[h] * (warm->b * est[h] + (1 - warm->b))
                                                   : warm->b * est[h] + (1 - warm->b) * f[h];
      }
      r2[h] = x * valid[h];
    }
    solver.set_range(opp, r2);
    const bool accumulate = t > cfg.omitted;
    solver.iterate(accumulate);
    const auto v2 = solver.values(opp, 0);
    gadget_step(gadget, ctx.v2, v2, &vg);
    if (accumulate) {
      ++acc;
      for (int h = 0; h < n; ++h) {
        r2sum[h] += r2[h];
        vgsum[h] += vg[h] * valid[h];
      }
    }
  }
  out->iterations = cfg.iterations;
  out->entry_range.resize(n);
  out->gadget_values.resize(n);
  for (int h = 0; h < n; ++h) {
    out->entry_range[h] = r2sum[h] / acc;
    out->gadget_values[h] = vgsum[h] / acc;
  }
  out->strategy = solver.average_strategy(0);
  if (cfg.best_response_values) {
    out->opp_values = solver.best_response_values(opp);
  } else {
    out->opp_values.resize(static_cast<std::size_t>(tree->size()) * n);
    for (int i = 0; i < tree->size(); ++i) {
      const auto v = solver.average_values(opp, i);
      std::copy(v.begin(), v.end(), out->opp_values.begin() + static_cast<std::ptrdiff_t>(i) * n);
    }
  }
  return out;
}

// Thread-safe cache of first-round re-solves keyed by the betting sequence.
// Equal keys produce equivalent entries, so concurrent inserts may race with
// last-writer-wins semantics.
class ResolveCache {
 public:
  std::shared_ptr<const ResolveOutput> get(const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) {
      ++misses_;
      return nullptr;
    }
    ++hits_;
    return it->second;
  }
  void put(const std::string& key, std::shared_ptr<const ResolveOutput> v) {
    std::lock_guard<std::mutex> lock(mu_);
    map_[key] = std::move(v);
  }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const ResolveOutput>> map_;
  std::size_t hits_ = 0, misses_ = 0;
};

// Value of being dealt each hand, from a depth-limited solve at the root
// with uniform ranges. The agent's range starts uniform.
inline ResolveContext initial_context(GamePtr game, int seat, const ResolveConfig& cfg, const ValueFn* vf) {
  const GameSpec& g = *game;
  const PublicState root = initial_state(g);
  SolveConfig sc = cfg.solve_config(0);
  sc.depth_limit = detail::resolve_depth(g, root, cfg.depth_limited);
  const Range u = uniform_range(g);
  auto res = cfr_solve(game, root, u, u, sc, sc.depth_limit == DepthLimit::kFullGame ? nullptr : vf);
  ResolveContext ctx;
  ctx.seat = seat;
  ctx.r1 = u;
  ctx.v2 = seat == 0 ? res.v2 : res.v1;
  ctx.current = root;
  ctx.round_started = true;
  return ctx;
}

// Rule (i): own action. r1 <- r1 * sigma(a|.) normalized; v2 <- the stored
// opponent values after a, rescaled by the same normalizer.
inline ResolveContext update_own_action(const ResolveContext& ctx, const Action& a,
                                        std::shared_ptr<const ResolveOutput> out, const GameSpec& g) {
  const auto it = std::find(out->actions.begin(), out->actions.end(), a);
  if (it == out->actions.end()) throw IllegalAction("action '" + a.str() + "' is not in the re-solved tree");
  const std::size_t ai = static_cast<std::size_t>(it - out->actions.begin()), na = out->actions.size();
  const int n = g.num_hands();
  ResolveContext next = ctx;
  double mass = 0;
  for (int h = 0; h < n; ++h) {
    next.r1[h] = ctx.r1[h] * out->strategy[h * na + ai];
    mass += next.r1[h];
  }
  const int child = out->tree().root().children[ai];
  const auto v = out->opp_values_at(child);
  next.v2.assign(v.begin(), v.end());
  if (mass > 0) {
    for (double& x : next.r1) x /= mass;
    for (double& x : next.v2) x /= mass;
  }
  next.current = apply_action(ctx.current, g, a);
  next.last = std::move(out);
  next.scale = mass;
  next.round_started = false;
  return next;
}

// Rule (iii): opponent action. Range and values are untouched.
inline ResolveContext update_opponent_action(const ResolveContext& ctx, const Action& a, const GameSpec& g) {
  ResolveContext next = ctx;
  next.current = apply_action(ctx.current, g, a);
  return next;
}

// Rule (ii): public cards. Hands conflicting with the cards leave the range;
// v2 comes from the stored values of this branch in the last re-solve when
// the branch is in its tree, otherwise the carried values are masked.
inline ResolveContext update_chance(const ResolveContext& ctx, std::span<const Card> cards, const GameSpec& g) {
  ResolveContext next = ctx;
  next.current = deal(ctx.current, g, cards);
  const int n = g.num_hands();
  const std::vector<double> valid = g.hands().board_mask(mask_of(next.current.board));
  double m = 0;
  for (int h = 0; h < n; ++h) {
    next.r1[h] *= valid[h];
    m += next.r1[h];
  }
  int node = -1;
  if (ctx.last) node = ctx.last->tree().find(next.current.key(g.deck()));
  if (m <= 0) {
    // The agent cannot hold any hand consistent with the cards.
    std::fill(next.v2.begin(), next.v2.end(), 0.0);
    next.scale = 0;
    next.round_started = true;
    return next;
  }
  if (node >= 0) {
    const auto v = ctx.last->opp_values_at(node);
    for (int h = 0; h < n; ++h) next.v2[h] = v[h] * valid[h] / (ctx.scale * m);
  } else {
    for (int h = 0; h < n; ++h) next.v2[h] = ctx.v2[h] * valid[h] / m;
  }
  for (double& x : next.r1) x /= m;
  next.scale = ctx.scale * m;
  next.round_started = true;
  return next;
}

// Warm start for the first own decision of a round: the previous re-solve's
// average opponent reach at the round's first state; aggressive when the
// agent acts first in the round, conservative otherwise.
inline std::optional<WarmStart> warm_start_for(const ResolveContext& ctx, const ResolveConfig& cfg,
                                               const GameSpec& g) {
  if (!cfg.warm_start || !ctx.last || !ctx.round_started || ctx.current.round == 0) return std::nullopt;
  PublicState start = ctx.current;
  const bool first = start.betting.back().empty();
  start.betting.back().clear();
  const int node = ctx.last->tree().find(start.key(g.deck()));
  if (node < 0) return std::nullopt;
  WarmStart w;
  w.mode = first ? WarmMode::kAggressive : WarmMode::kConservative;
  w.b = cfg.warm_b;
  w.estimate = ctx.last->solver->average_reach(1 - ctx.seat, node);
  return w;
}

}  // namespace dstack
