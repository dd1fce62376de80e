#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "dstack/core/game_spec.hpp"
#include "dstack/lookahead/oracle.hpp"
#include "dstack/resolving/continual.hpp"
#include "dstack/resolving/gadget.hpp"
#include "dstack/resolving/resolve.hpp"
#include "dstack/solver/best_response.hpp"
#include "dstack/solver/cfr.hpp"

namespace dstack {
namespace {

SolveConfig full_config(int iters, int omitted = 0) {
  SolveConfig c;
  c.iterations = iters;
  c.omitted = omitted;
  c.depth_limit = DepthLimit::kFullGame;
  return c;
}

TEST(GadgetTest, StepExamples) {
  GadgetState g(2);
  std::vector<double> vg;
  // Zero regrets: follow with probability 1/2.
  const auto f = gadget_step(g, std::vector<double>{1, 0}, std::vector<double>{3, -2}, &vg);
  EXPECT_EQ(f, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(vg, (std::vector<double>{2, -1}));
  // Hand 0: following beats the constraint, hand 1 prefers to terminate.
  EXPECT_EQ(g.follow, (std::vector<double>{1, 0}));
  EXPECT_EQ(g.terminate, (std::vector<double>{0, 1}));
  EXPECT_EQ(g.follow_probability(), (std::vector<double>{1, 0}));
  const auto f2 = gadget_step(g, std::vector<double>{1, 0}, std::vector<double>{3, -2}, &vg);
  EXPECT_EQ(f2, (std::vector<double>{1, 0}));
  EXPECT_EQ(vg, (std::vector<double>{3, 0}));
  EXPECT_THROW(gadget_step(g, std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(UpdateTest, OpponentActionIsIdentity) {
  const auto g = make_leduc();
  ResolveContext ctx;
  ctx.seat = 0;
  ctx.current = replay(*g, "c", {});
  ctx.r1 = {0.1, 0.2, 0.3, 0.1, 0.2, 0.1};
  ctx.v2 = {1, -2, 3, -4, 5, -6};
  const auto next = update_opponent_action(ctx, Action::raise_to(3), *g);
  EXPECT_EQ(next.r1, ctx.r1);
  EXPECT_EQ(next.v2, ctx.v2);
  EXPECT_EQ(next.current.betting_string(), "cr3");
  EXPECT_EQ(next.scale, ctx.scale);
}

TEST(UpdateTest, ChanceMasksAndRenormalizes) {
  const auto g = make_leduc();
  ResolveContext ctx;
  ctx.seat = 0;
  ctx.current = replay(*g, "cc", {});
  ctx.r1.assign(6, 1.0 / 6);
  ctx.v2 = {6, 6, 6, 6, 6, 6};
  const Card k = g->deck().parse_card("Kh");
  const std::vector<Card> cards = {k};
  const auto next = update_chance(ctx, cards, *g);
  const int blocked = g->hands().index(cards);
  EXPECT_EQ(next.r1[blocked], 0);
  EXPECT_NEAR(std::accumulate(next.r1.begin(), next.r1.end(), 0.0), 1, 1e-15);
  EXPECT_EQ(next.v2[blocked], 0);
  // Carried values are divided by the surviving mass 5/6.
  EXPECT_NEAR(next.v2[(blocked + 1) % 6], 6 / (5.0 / 6), 1e-12);
  EXPECT_TRUE(next.round_started);
}

TEST(ResolveTest, KuhnRootResolveIsUnexploitable) {
  const auto g = make_kuhn();
  ResolveConfig rc;
  rc.iterations = 20000;
  rc.omitted = 10000;
  ContinualResolver r(g, rc, nullptr);
  for (int seat = 0; seat < 2; ++seat) {
    StrategyProfile prof(g);
    extract_strategy(r, seat, prof);
    const auto rep = best_response(g, prof);
    // br[1 - seat] is the opponent's best value against this seat's strategy.
    const double seat_value = seat == 0 ? -1.0 / 18 : 1.0 / 18;
    EXPECT_LT((rep.br[1 - seat] + seat_value) * 1000 / g->unit(), 1.0) << seat;
  }
}

TEST(ResolveTest, InitialContextMatchesFullSolve) {
  const auto g = make_kuhn();
  ResolveConfig rc;
  rc.iterations = 20000;
  const auto ctx = initial_context(g, 1, rc, nullptr);
  const auto full = cfr_solve(g, initial_state(*g), uniform_range(*g), uniform_range(*g), full_config(20000), nullptr);
  EXPECT_EQ(ctx.v2, full.v1);
  // The first player loses with J and wins with K at equilibrium.
  EXPECT_LT(ctx.v2[0], 0);
  EXPECT_GT(ctx.v2[2], 0);
  EXPECT_NEAR(game_value(*g, uniform_range(*g), ctx.v2), -1.0 / 18, 2e-3);
}

TEST(ResolveTest, RejectsWrongActor) {
  const auto g = make_kuhn();
  ResolveContext ctx;
  ctx.seat = 1;
  ctx.current = initial_state(*g);
  ctx.r1 = uniform_range(*g);
  ctx.v2.assign(3, 0.0);
  EXPECT_THROW(resolve_lookahead(g, ctx, ResolveConfig{}, nullptr), InvalidState);
}

// A Leduc subgame below the first check, seat 1 to act. Values and reach
// come from a best response to the average strategy of a full solve.
struct Graft {
  GamePtr g = make_leduc();
  SolveResult full;
  PublicState root;
  int node = -1;
  ResolveContext ctx;
  double mass = 0;

  explicit Graft(int full_iters) {
    full = cfr_solve(g, initial_state(*g), uniform_range(*g), uniform_range(*g), full_config(full_iters), nullptr);
    root = replay(*g, "c", {});
    node = full.solver->tree().find(root.key(g->deck()));
    const int n = g->num_hands();
    const auto bv = full.solver->best_response_values(0);
    const auto reach = full.solver->reach(1, node);
    ctx.seat = 1;
    ctx.current = root;
    ctx.r1.assign(reach.begin(), reach.end());
    mass = std::accumulate(ctx.r1.begin(), ctx.r1.end(), 0.0);
    for (double& x : ctx.r1) x /= mass;
    ctx.v2.assign(bv.begin() + static_cast<std::ptrdiff_t>(node) * n, bv.begin() + static_cast<std::ptrdiff_t>(node + 1) * n);
    for (double& x : ctx.v2) x /= mass;
  }
};

TEST(ResolveTest, GraftedSubgameKeepsExploitability) {
  Graft gr(10000);
  ResolveConfig rc;
  rc.iterations = 10000;
  rc.omitted = 5000;
  rc.depth_limited = false;
  rc.warm_start = false;
  const auto out = resolve_lookahead(gr.g, gr.ctx, rc, nullptr);
  StrategyProfile grafted = gr.full.profile;
  const PublicTree& t = out->tree();
  int replaced = 0;
  for (int i = 0; i < t.size(); ++i) {
    const auto& nd = t.node(i);
    if (nd.kind != NodeKind::kDecision || nd.state.actor != 1) continue;
    grafted.set(nd.state, nd.actions, out->solver->average_strategy(i));
    ++replaced;
  }
  EXPECT_GT(replaced, 10);
  const double before = best_response(gr.g, gr.full.profile).mbb;
  const double after = best_response(gr.g, grafted).mbb;
  EXPECT_LT(after - before, 1.0) << "before " << before << " after " << after;
}

TEST(ResolveTest, GadgetValueEqualsConstraintSum) {
  Graft gr(10000);
  const GameSpec& g = *gr.g;
  ResolveConfig rc;
  rc.iterations = 10000;
  rc.omitted = 5000;
  rc.depth_limited = false;
  rc.warm_start = false;
  const auto out = resolve_lookahead(gr.g, gr.ctx, rc, nullptr);
  // Both sums are opponent values per unit of the agent's reach; scale back
  // to the whole game with uniform 1/N opponent hand weights.
  const int n = g.num_hands();
  double gadget = 0, w = 0;
  for (int h = 0; h < n; ++h) {
    gadget += out->gadget_values[h] / n;
    w += gr.ctx.v2[h] / n;
  }
  const double k = gr.mass * g.deal_normalizer(0) * 1000 / g.unit();
  EXPECT_LT(std::abs(gadget - w) * k, 0.5) << "gadget " << gadget * k << " w " << w * k;
}

TEST(ResolveTest, ConservativeWarmStartKeepsEveryHand) {
  Graft gr(2000);
  ResolveConfig rc;
  rc.iterations = 200;
  rc.depth_limited = false;
  WarmStart ws;
  ws.mode = WarmMode::kConservative;
  ws.b = 0.9;
  ws.estimate = {1, 0, 0, 0, 0, 0};  // a wrong, degenerate estimate
  const auto out = resolve_lookahead(gr.g, gr.ctx, rc, nullptr, &ws);
  for (double x : out->entry_range) EXPECT_GT(x, 0);
  ws.b = 1.5;
  EXPECT_THROW(resolve_lookahead(gr.g, gr.ctx, rc, nullptr, &ws), Error);
}

TEST(ResolveTest, FirstRoundCache) {
  const auto g = make_leduc();
  ResolveConfig rc;
  rc.iterations = 50;
  auto vf = oracle_valuefn(g, {50, 0, {}, 200000});
  ContinualResolver r(g, rc, vf);
  const auto ctx = r.start(0);
  const auto a = r.resolve(ctx);
  const auto b = r.resolve(ctx);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(r.cache()->hits(), 1u);
  EXPECT_EQ(r.cache()->misses(), 1u);
  EXPECT_EQ(r.solver_iterations(), 50);

  rc.cache_first_round = false;
  ContinualResolver nc(g, rc, vf);
  const auto ctx2 = nc.start(0);
  EXPECT_NE(nc.resolve(ctx2).get(), nc.resolve(ctx2).get());
  EXPECT_EQ(nc.cache(), nullptr);
  EXPECT_EQ(nc.solver_iterations(), 100);
}

TEST(ResolveTest, OwnActionUpdatesRangeAndValues) {
  const auto g = make_leduc();
  ResolveConfig rc;
  rc.iterations = 100;
  auto vf = oracle_valuefn(g, {50, 0, {}, 200000});
  ContinualResolver r(g, rc, vf);
  const auto ctx = r.start(0);
  const auto out = r.resolve(ctx);
  const int n = g->num_hands(), na = static_cast<int>(out->actions.size());
  for (int ai = 0; ai < na; ++ai) {
    const auto next = update_own_action(ctx, out->actions[ai], out, *g);
    double mass = 0;
    for (int h = 0; h < n; ++h) mass += ctx.r1[h] * out->strategy[h * na + ai];
    EXPECT_NEAR(next.scale, mass, 1e-15);
    for (int h = 0; h < n; ++h) EXPECT_NEAR(next.r1[h], ctx.r1[h] * out->strategy[h * na + ai] / mass, 1e-15);
    const int child = out->tree().root().children[ai];
    const auto v = out->opp_values_at(child);
    for (int h = 0; h < n; ++h) EXPECT_NEAR(next.v2[h], v[h] / mass, 1e-12);
    EXPECT_FALSE(next.round_started);
  }
  EXPECT_THROW(update_own_action(ctx, Action::raise_to(99), out, *g), IllegalAction);
}

// Fixed-path trace on Leduc against a stored golden file. Set
// DSTACK_REGEN_GOLDEN=1 to rewrite it.
TEST(ResolveTest, GoldenTrace) {
  const auto g = make_leduc();
  ResolveConfig rc;
  rc.iterations = 100;
  rc.omitted = 50;
  auto vf = oracle_valuefn(g, {100, 50, {}, 200000});
  ContinualResolver r(g, rc, vf);
  std::vector<TraceRecord> trace;
  auto decide = [&](ResolveContext& ctx, const Action& a) {
    const auto out = r.resolve(ctx);
    const int na = static_cast<int>(out->actions.size());
    TraceRecord t;
    t.key = ctx.current.key(g->deck());
    t.r1 = ctx.r1;
    t.v2 = ctx.v2;
    t.action = a;
    t.sigma.assign(out->strategy.begin(), out->strategy.begin() + na);
    trace.push_back(t);
    ctx = update_own_action(ctx, a, out, *g);
  };
  // Seat 0: raise, opponent calls, board Qh, seat 0 checks, opponent bets, seat 0 calls.
  ResolveContext ctx = r.start(0);
  decide(ctx, Action::raise_to(3));
  ctx = update_opponent_action(ctx, Action::call(), *g);
  const std::vector<Card> board = {g->deck().parse_card("Qh")};
  ctx = update_chance(ctx, board, *g);
  decide(ctx, Action::call());
  ctx = update_opponent_action(ctx, Action::raise_to(7), *g);
  decide(ctx, Action::call());

  const std::string path = std::string(DSTACK_TEST_DATA) + "/leduc_trace.txt";
  if (std::getenv("DSTACK_REGEN_GOLDEN")) {
    std::ofstream f(path);
    for (const auto& t : trace) f << t.str() << '\n';
  }
  std::ifstream f(path);
  ASSERT_TRUE(f) << path;
  std::string line;
  std::size_t i = 0;
  for (; std::getline(f, line); ++i) {
    ASSERT_LT(i, trace.size());
    const auto want = TraceRecord::parse(line);
    EXPECT_EQ(want.key, trace[i].key);
    EXPECT_EQ(want.action, trace[i].action);
    auto near = [](const std::vector<double>& a, const std::vector<double>& b) {
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9 * (1 + std::abs(a[k])));
    };
    near(want.r1, trace[i].r1);
    near(want.v2, trace[i].v2);
    near(want.sigma, trace[i].sigma);
  }
  EXPECT_EQ(i, trace.size());
}

}  // namespace
}  // namespace dstack
