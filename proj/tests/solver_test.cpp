#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include <gtest/gtest.h>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/solver/best_response.hpp"
#include "dstack/solver/cfr.hpp"
#include "dstack/solver/regret_matching.hpp"

namespace dstack {
namespace {

TEST(RegretMatchingTest, Examples) {
  const std::vector<double> a = {3, 1, 0}, b = {-2, -5}, c = {0, 0, 0, 4};
  EXPECT_EQ(regret_matching_plus(a), (std::vector<double>{0.75, 0.25, 0}));
  EXPECT_EQ(regret_matching_plus(b), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(regret_matching_plus(c), (std::vector<double>{0, 0, 0, 1}));
  EXPECT_THROW(regret_matching_plus(std::vector<double>{}), Error);
}

TEST(RegretMatchingTest, AlwaysADistribution) {
  Rng rng(1);
  for (int it = 0; it < 1000; ++it) {
    std::vector<double> r(1 + it % 7);
    for (double& x : r) x = standard_normal(rng) * 10;
    const auto s = regret_matching_plus(r);
    double tot = 0;
    for (double x : s) {
      EXPECT_GE(x, 0);
      tot += x;
    }
    EXPECT_NEAR(tot, 1, 1e-12);
  }
}

SolveConfig full_config(int iters, int omitted = 0) {
  SolveConfig cfg;
  cfg.iterations = iters;
  cfg.omitted = omitted;
  return cfg;
}

TEST(CfrTest, SingleIterationIsUniform) {
  auto g = make_leduc();
  const Range u = uniform_range(*g);
  auto res = cfr_solve(g, initial_state(*g), u, u, full_config(1), nullptr);
  for (const auto& [key, e] : res.profile.entries())
    for (double p : e.probs) EXPECT_DOUBLE_EQ(p, 1.0 / static_cast<double>(e.actions.size())) << key;
}

TEST(CfrTest, RejectsBadConfig) {
  auto g = make_kuhn();
  const Range u = uniform_range(*g);
  EXPECT_THROW(cfr_solve(g, initial_state(*g), u, u, full_config(0), nullptr), Error);
  EXPECT_THROW(cfr_solve(g, initial_state(*g), u, u, full_config(10, 10), nullptr), Error);
  SolveConfig cfg = full_config(10);
  cfg.depth_limit = DepthLimit::kEndOfRound;
  auto leduc = make_leduc();
  EXPECT_THROW(cfr_solve(leduc, initial_state(*leduc), uniform_range(*leduc), uniform_range(*leduc), cfg, nullptr),
               Error);
}

TEST(CfrTest, KuhnGameValue) {
  auto g = make_kuhn();
  const Range u = uniform_range(*g);
  auto res = cfr_solve(g, initial_state(*g), u, u, full_config(100000), nullptr);
  EXPECT_NEAR(game_value(*g, u, res.v1), -1.0 / 18.0, 1e-3);
  // Average root values are zero-sum.
  double z = 0;
  for (int h = 0; h < g->num_hands(); ++h) z += u[h] * res.v1[h] + u[h] * res.v2[h];
  EXPECT_NEAR(z, 0, 1e-6);
  EXPECT_LT(best_response(g, res.profile).mbb, 1.0);
}

// Independent best-response oracle: enumerates information sets explicitly
// (hand + betting history) over scalar histories, computing each best
// response action from the sum over consistent deals.
struct HistoryBr {
  GamePtr g;
  const Policy& pol;
  int p;

  // Returns, for each BR hand, the value of the subtree for the deal
  // (hand, opp, board) weighted by chance/opponent reach, for a fixed policy
  // of p given by `choice`.
  using Choice = std::map<std::pair<std::string, int>, int>;

  double value(const PublicState& s, int hp, int ho, double reach, const Choice& choice) const {
    const GameSpec& gs = *g;
    if (s.is_terminal()) {
      std::array<std::vector<Card>, 2> hole;
      auto cards = [&](int h) {
        auto c = gs.hands().cards(h);
        return std::vector<Card>(c.begin(), c.end());
      };
      hole[p] = cards(hp);
      hole[1 - p] = cards(ho);
      std::array<Chips, 2> net{};
      if (s.folder >= 0) {
        net[1 - s.folder] = s.total[s.folder];
        net[s.folder] = -s.total[s.folder];
      } else {
        const auto a = gs.rank(hole[0], s.board), b = gs.rank(hole[1], s.board);
        net[0] = a > b ? s.total[1] : (a < b ? -s.total[0] : (s.total[1] - s.total[0]) / 2);
        net[1] = -net[0];
      }
      return reach * net[p];
    }
    if (s.is_chance()) {
      const CardMask used = mask_of(s.board) | gs.hands().mask(hp) | gs.hands().mask(ho);
      const auto deals = card_subsets(gs.deck().size(), used, cards_to_deal(s, gs));
      double v = 0;
      for (const auto& d : deals) v += value(deal(s, gs, d), hp, ho, reach / deals.size(), choice);
      return v;
    }
    const auto acts = legal_actions(s, gs);
    if (s.actor == p) {
      const int a = choice.at({s.key(gs.deck()), hp});
      return value(apply_action(s, gs, acts[a]), hp, ho, reach, choice);
    }
    std::vector<double> probs;
    pol.action_probs(s, acts, probs);
    double v = 0;
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const double q = probs[ho * acts.size() + a];
      if (q > 0) v += value(apply_action(s, gs, acts[a]), hp, ho, reach * q, choice);
    }
    return v;
  }

  // Best response by iterating over information sets bottom-up: solve each
  // infoset of p greedily given optimal choices below (perfect recall).
  double solve() {
    const GameSpec& gs = *g;
    std::vector<std::pair<int, PublicState>> order;  // depth, state
    std::function<void(const PublicState&, int)> collect = [&](const PublicState& s, int depth) {
      if (s.is_terminal()) return;
      if (s.is_chance()) {
        for (const auto& d : card_subsets(gs.deck().size(), mask_of(s.board), cards_to_deal(s, gs)))
          collect(deal(s, gs, d), depth + 1);
        return;
      }
      if (s.actor == p) order.emplace_back(depth, s);
      for (const Action& a : legal_actions(s, gs)) collect(apply_action(s, gs, a), depth + 1);
    };
    collect(initial_state(gs), 0);
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    Choice choice;
    for (const auto& [d, s] : order)
      for (int h = 0; h < gs.num_hands(); ++h) choice[{s.key(gs.deck()), h}] = 0;
    const int n = gs.num_hands();
    for (const auto& [d, s] : order) {
      const auto acts = legal_actions(s, gs);
      for (int hp = 0; hp < n; ++hp) {
        if (gs.hands().mask(hp) & mask_of(s.board)) continue;
        double best = -1e300;
        int arg = 0;
        for (std::size_t a = 0; a < acts.size(); ++a) {
          choice[{s.key(gs.deck()), hp}] = static_cast<int>(a);
          // Value of the infoset: sum over opponent hands of reach-weighted
          // subtree values from this state, times the opponent's reach to it.
          double v = 0;
          for (int ho = 0; ho < n; ++ho) {
            if (!gs.hands().compatible(hp, ho) || (gs.hands().mask(ho) & mask_of(s.board))) continue;
            v += opponent_reach(s, ho) * value(s, hp, ho, 1.0, choice);
          }
          if (v > best + 1e-12) {
            best = v;
            arg = static_cast<int>(a);
          }
        }
        choice[{s.key(gs.deck()), hp}] = arg;
      }
    }
    // Expected value over deals.
    double total = 0;
    int deals = 0;
    for (int hp = 0; hp < n; ++hp)
      for (int ho = 0; ho < n; ++ho) {
        if (!gs.hands().compatible(hp, ho)) continue;
        total += value(initial_state(gs), hp, ho, 1.0, choice);
        ++deals;
      }
    return total / deals;
  }

  // Opponent's own reach to s with hand ho (product of its action probs).
  double opponent_reach(const PublicState& target, int ho) const {
    const GameSpec& gs = *g;
    PublicState s = initial_state(gs);
    double r = 1;
    std::size_t board_pos = 0;
    for (std::size_t round = 0; round < target.betting.size(); ++round) {
      if (round > 0) {
        while (s.is_chance()) {
          const int k = cards_to_deal(s, gs);
          s = deal(s, gs, std::span<const Card>(target.board.data() + board_pos, k));
          board_pos += k;
        }
      }
      for (const Action& a : target.betting[round]) {
        if (s.actor != p) {
          const auto acts = legal_actions(s, gs);
          std::vector<double> probs;
          pol.action_probs(s, acts, probs);
          const auto it = std::find(acts.begin(), acts.end(), a);
          r *= probs[ho * acts.size() + (it - acts.begin())];
        }
        s = apply_action(s, gs, a);
      }
    }
    return r;
  }
};

// A fixed, card-dependent pseudo-random policy.
class HashedPolicy : public Policy {
 public:
  explicit HashedPolicy(GamePtr g) : g_(std::move(g)) {}
  void action_probs(const PublicState& s, const std::vector<Action>& actions, std::vector<double>& out) const override {
    const int n = g_->num_hands();
    const std::size_t na = actions.size();
    out.assign(n * na, 0);
    const std::uint64_t key = std::hash<std::string>{}(s.key(g_->deck()));
    for (int h = 0; h < n; ++h) {
      double tot = 0;
      for (std::size_t a = 0; a < na; ++a) {
        out[h * na + a] = 0.1 + static_cast<double>(splitmix64(key + 31 * h + 7 * a) % 1000) / 1000.0;
        tot += out[h * na + a];
      }
      for (std::size_t a = 0; a < na; ++a) out[h * na + a] /= tot;
    }
  }

 private:
  GamePtr g_;
};

class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(GamePtr g) : g_(std::move(g)) {}
  void action_probs(const PublicState&, const std::vector<Action>& actions, std::vector<double>& out) const override {
    out.assign(g_->num_hands() * actions.size(), 1.0 / static_cast<double>(actions.size()));
  }
  bool is_public() const override { return true; }

 private:
  GamePtr g_;
};

TEST(BestResponseTest, MatchesHistoryOracle) {
  for (const GamePtr& g : {make_kuhn(), make_leduc()}) {
    HashedPolicy hashed(g);
    UniformPolicy uniform(g);
    for (const Policy* pol : {static_cast<const Policy*>(&hashed), static_cast<const Policy*>(&uniform)}) {
      const auto rep = best_response(g, *pol);
      for (int p = 0; p < 2; ++p) {
        HistoryBr oracle{g, *pol, p};
        EXPECT_NEAR(rep.br[p], oracle.solve(), 1e-9) << g->name() << " seat " << p;
      }
    }
  }
}

// Kuhn equilibrium family with alpha = 0 (Kuhn's analytic solution).
TEST(BestResponseTest, KuhnAnalyticEquilibriumIsUnexploitable) {
  auto g = make_kuhn();
  StrategyProfile prof(g);
  // Hands: J=0, Q=1, K=2. Actions are (call/check, raise) or (fold, call).
  const auto root = initial_state(*g);
  auto set = [&](const std::string& betting, std::vector<double> probs) {
    const PublicState s = replay(*g, betting, {});
    prof.set(s, legal_actions(s, *g), std::move(probs));
  };
  set("", {1, 0, 1, 0, 1, 0});                          // P1 always checks first (alpha = 0)
  set("c", {2. / 3, 1. / 3, 1, 0, 0, 1});               // P2 after check: bluff J 1/3, bet K
  set("r2", {1, 0, 2. / 3, 1. / 3, 0, 1});              // P2 facing bet: call Q 1/3, K always
  set("cr2", {1, 0, 2. / 3, 1. / 3, 0, 1});             // P1 facing bet after check: Q calls 1/3
  (void)root;
  const auto rep = best_response(g, prof);
  EXPECT_NEAR(rep.exploitability, 0, 1e-9);
  EXPECT_NEAR(rep.br[0], -1.0 / 18, 1e-9);
}

TEST(BestResponseTest, LeducTrendAndThreshold) {
  auto g = make_leduc();
  const Range u = uniform_range(*g);
  auto tree = build_tree(g, initial_state(*g), ActionMenu::full_width(), DepthLimit::kFullGame);
  CfrSolver solver(tree, nullptr);
  solver.set_ranges(u, u);
  double prev = 1e300;
  const auto t0 = std::chrono::steady_clock::now();
  for (int T : {100, 1000, 10000}) {
    CfrSolver s(tree, nullptr);
    s.set_ranges(u, u);
    s.solve(T, 0);
    const double e = best_response(g, s.average_profile()).mbb;
    EXPECT_LT(e, prev) << T;
    prev = e;
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60);
}

class AlwaysFold : public Policy {
 public:
  explicit AlwaysFold(GamePtr g) : g_(std::move(g)) {}
  void action_probs(const PublicState&, const std::vector<Action>& actions, std::vector<double>& out) const override {
    const std::size_t na = actions.size();
    out.assign(g_->num_hands() * na, 0);
    // Fold when facing a wager, else check: either way the first action.
    for (int h = 0; h < g_->num_hands(); ++h) out[h * na] = 1;
  }
  bool is_public() const override { return true; }
  void public_probs(const PublicState&, const std::vector<Action>& actions, std::vector<double>& out) const override {
    out.assign(actions.size(), 0);
    out[0] = 1;
  }

 private:
  GamePtr g_;
};

TEST(BestResponseTest, HunlAlwaysFoldIs750) {
  auto g = make_hunl();
  AlwaysFold fold(g);
  const auto rep = best_response(g, fold);
  EXPECT_DOUBLE_EQ(rep.br[0], 100);
  EXPECT_DOUBLE_EQ(rep.br[1], 50);
  EXPECT_DOUBLE_EQ(rep.mbb, 750);
}

TEST(BestResponseTest, NodeGuardRefuses) {
  auto g = make_hunl();
  UniformPolicy u(g);
  EXPECT_THROW(best_response(g, u, 200), GameTooLarge);
}

}  // namespace
}  // namespace dstack
