#include <algorithm>
#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/lookahead/action_menu.hpp"
#include "dstack/lookahead/oracle.hpp"
#include "dstack/lookahead/tree.hpp"
#include "dstack/lookahead/value_fn.hpp"

namespace dstack {
namespace {

// Independent node counter: plain recursion over game-core transitions.
long count_nodes(const GameSpec& g, const PublicState& s, int root_round, bool depth_limited) {
  if (s.is_terminal()) return 1;
  if (depth_limited && s.is_decision() && s.round > root_round) return 1;
  long n = 1;
  if (s.is_chance()) {
    for (const auto& d : card_subsets(g.deck().size(), mask_of(s.board), cards_to_deal(s, g)))
      n += count_nodes(g, deal(s, g, d), root_round, depth_limited);
    return n;
  }
  for (const Action& a : legal_actions(s, g)) n += count_nodes(g, apply_action(s, g, a), root_round, depth_limited);
  return n;
}

TEST(MenuTest, ParseAndPrint) {
  const auto m = ActionMenu::layered("F,C,0.5P,P,A", "F,C,P,A", "F,C,A");
  EXPECT_EQ(ActionMenu::parse(m.str()), m);
  EXPECT_EQ(ActionMenu::parse("full"), ActionMenu::full_width());
  EXPECT_EQ(BetOption::parse("0.5P").fraction, 0.5);
  EXPECT_THROW(BetOption::parse("X"), Error);
  EXPECT_THROW(BetOption::parse("-1P"), Error);
  EXPECT_THROW(parse_option_set("F,P"), Error);  // call is mandatory
}

TEST(MenuTest, PotBetsClampAndMerge) {
  const auto g = make_hunl();
  const PublicState s = initial_state(*g);  // SB to act: 50 in, facing 100
  // Pot after the call is 200, so P raises to 100 + 200 = 300.
  EXPECT_EQ(pot_fraction_raise_to(s, 1.0), 300);
  const auto acts = menu_actions(s, *g, ActionMenu::uniform("F,C,0.01P,P,1000P,A"), 0);
  // 0.01P clamps up to the min-raise (200); 1000P clamps to all-in and merges with A.
  ASSERT_EQ(acts.size(), 5u);
  EXPECT_EQ(acts[0], Action::fold());
  EXPECT_EQ(acts[1], Action::call());
  EXPECT_EQ(acts[2], Action::raise_to(200));
  EXPECT_EQ(acts[3], Action::raise_to(300));
  EXPECT_EQ(acts[4], Action::raise_to(20000));
  for (const Action& a : acts) EXPECT_TRUE(is_legal(s, *g, a));
  // No fold when not facing a wager.
  const PublicState limp = apply_action(s, *g, Action::call());
  const auto acts2 = menu_actions(limp, *g, ActionMenu::uniform("F,C,P"), 0);
  EXPECT_EQ(acts2.front(), Action::call());
  EXPECT_EQ(acts2.size(), 2u);
}

TEST(MenuTest, LimitGamesIgnoreSizes) {
  const auto g = make_leduc();
  const PublicState s = initial_state(*g);
  EXPECT_EQ(menu_actions(s, *g, ActionMenu::uniform("F,C,P,A"), 0), legal_actions(s, *g));
}

TEST(TreeTest, NodeCountsMatchBruteForce) {
  for (const auto& g : {make_kuhn(), make_leduc()}) {
    const PublicState root = initial_state(*g);
    const auto full = build_tree(g, root, ActionMenu::full_width(), DepthLimit::kFullGame);
    EXPECT_EQ(full->size(), count_nodes(*g, root, 0, false)) << g->name();
    const auto dl = build_tree(g, root, ActionMenu::full_width(), DepthLimit::kEndOfRound);
    EXPECT_EQ(dl->size(), count_nodes(*g, root, 0, true)) << g->name();
  }
  const auto g = make_leduc();
  EXPECT_EQ(build_tree(g, initial_state(*g), ActionMenu::full_width(), DepthLimit::kFullGame)->size(), 465);
}

TEST(TreeTest, StructureAndLookup) {
  const auto g = make_leduc();
  const auto t = build_tree(g, initial_state(*g), ActionMenu::full_width(), DepthLimit::kEndOfRound);
  for (int leaf : t->leaves()) {
    const auto& n = t->node(leaf);
    EXPECT_EQ(n.state.round, 1);
    EXPECT_TRUE(n.children.empty());
  }
  for (int i = 0; i < t->size(); ++i) {
    const auto& n = t->node(i);
    EXPECT_EQ(t->find(n.state.key(g->deck())), i);
    for (int c : n.children) EXPECT_EQ(t->node(c).parent, i);
    if (n.kind == NodeKind::kChance) {
      // 6 cards minus two private cards leaves 4 live cards.
      EXPECT_DOUBLE_EQ(n.chance_weight, 0.25);
      EXPECT_EQ(n.children.size(), 6u);
    }
  }
  const int c = t->child_by_action(0, Action::call());
  ASSERT_GE(c, 0);
  EXPECT_EQ(t->node(c).state.betting_string(), "c");
}

TEST(TreeTest, MenusShrinkTreesMonotonically) {
  const auto g = make_leduc_nolimit();
  const PublicState root = initial_state(*g);
  const std::vector<std::string> menus = {"F,C", "F,C,A", "F,C,P,A", "F,C,0.5P,P,A", "F,C,0.5P,P,2P,A"};
  int prev = 0;
  for (const auto& m : menus) {
    const int size = build_tree(g, root, ActionMenu::uniform(m), DepthLimit::kFullGame)->size();
    EXPECT_GT(size, prev) << m;
    prev = size;
  }
}

TEST(TreeTest, GuardRefusesLargeTrees) {
  const auto g = make_hunl();
  EXPECT_THROW(build_tree(g, initial_state(*g), ActionMenu::uniform("F,C,P,A"), DepthLimit::kEndOfRound, 1000),
               GameTooLarge);
}

TEST(ZeroSumLayerTest, RandomInputsBalance) {
  Rng rng(7);
  for (int it = 0; it < 10000; ++it) {
    const int n = 1 + static_cast<int>(uniform_int(rng, 0, 40));
    std::vector<double> r1(n), r2(n), v1(n), v2(n);
    for (int i = 0; i < n; ++i) {
      r1[i] = uniform01(rng) < 0.2 ? 0 : uniform01(rng);
      r2[i] = uniform01(rng) < 0.2 ? 0 : uniform01(rng);
      v1[i] = standard_normal(rng) * 100;
      v2[i] = standard_normal(rng) * 100;
    }
    const CfvPair z = zero_sum_layer(v1, v2, r1, r2);
    double s = 0;
    for (int i = 0; i < n; ++i) s += r1[i] * z.v1[i] + r2[i] * z.v2[i];
    ASSERT_LE(std::abs(s), 1e-9) << it;
  }
}

TEST(ZeroSumLayerTest, BalancedInputsUntouched) {
  std::vector<double> r1 = {0.5, 0.5}, r2 = {1, 0}, v1 = {2, -2}, v2 = {0, 7};
  const CfvPair z = zero_sum_layer(v1, v2, r1, r2);
  EXPECT_EQ(z.v1, (std::vector<double>{2, -2}));
  EXPECT_EQ(z.v2, (std::vector<double>{0, 7}));
}

TEST(OracleTest, RejectsBlockedMassAndWrongPot) {
  const auto g = make_leduc();
  PublicState s = replay(*g, "cc", {});
  const std::vector<Card> board = {g->deck().parse_card("Kh")};
  s = deal(s, *g, board);
  auto vf = oracle_valuefn(g, {100, 0, {}, 200000});
  Range r = uniform_range(*g);
  EXPECT_THROW(vf->evaluate(s, r, r, s.pot()), Error);
  const Range ok = uniform_range(*g, board);
  EXPECT_THROW(vf->evaluate(s, ok, ok, s.pot() + 1), Error);
  const auto v = vf->evaluate(s, ok, ok, s.pot());
  const int blocked = g->hands().index(board);
  EXPECT_EQ(v.v1[blocked], 0);
  double zs = 0;
  for (int h = 0; h < g->num_hands(); ++h) zs += ok[h] * (v.v1[h] + v.v2[h]);
  EXPECT_NEAR(zs, 0, 1e-12);
}

}  // namespace
}  // namespace dstack
