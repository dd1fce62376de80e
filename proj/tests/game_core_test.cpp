#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/hand_history.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/core/state.hpp"
#include "dstack/core/terminal.hpp"

namespace dstack {
namespace {

bool has(const std::vector<Action>& acts, ActionKind k) {
  return std::any_of(acts.begin(), acts.end(), [k](const Action& a) { return a.kind == k; });
}

TEST(GameSpecTest, BuiltinsAreConsistent) {
  auto kuhn = make_kuhn();
  EXPECT_EQ(kuhn->num_hands(), 3);
  EXPECT_EQ(kuhn->num_rounds(), 1);
  auto leduc = make_leduc();
  EXPECT_EQ(leduc->num_hands(), 6);
  EXPECT_EQ(leduc->deck().size(), 6);
  auto hunl = make_hunl();
  EXPECT_EQ(hunl->num_hands(), 1326);
  EXPECT_EQ(hunl->big_blind(), 2 * hunl->small_blind());
  EXPECT_EQ(hunl->stack(), 20000);
  EXPECT_EQ(hunl->unit(), 100);
}

TEST(GameSpecTest, RejectsBadBlinds) {
  GameParams p = make_leduc()->params();
  p.small_blind = 3;
  p.big_blind = 4;
  EXPECT_THROW(GameSpec{p}, Error);
}

TEST(GameSpecTest, ConfigParsesAndReportsLines) {
  const std::string text =
      "# toy\n"
      "name = toy\n"
      "ranks = QKA\n"
      "suits = sh\n"
      "private_cards = 1\n"
      "ante = 1\n"
      "stack = 10\n"
      "betting = nolimit\n"
      "showdown = pairboard\n"
      "round = 0 0\n"
      "round = 1 1\n";
  auto g = parse_game_config(text);
  EXPECT_EQ(g->name(), "toy");
  EXPECT_EQ(g->num_rounds(), 2);
  EXPECT_EQ(g->betting(), BettingType::kNoLimit);
  try {
    parse_game_config("ranks = QKA\nsuits = sh\nbogus = 1\n");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(make_game("/nonexistent/game.cfg"), Error);
}

TEST(StateTest, HunlOpeningActions) {
  auto g = make_hunl();
  const PublicState s = initial_state(*g);
  EXPECT_EQ(s.actor, 0);
  EXPECT_EQ(s.pot(), 150);
  const auto acts = legal_actions(s, *g);
  EXPECT_EQ(acts.front(), Action::fold());
  EXPECT_EQ(acts[1], Action::call());
  EXPECT_EQ(acts[2], Action::raise_to(200));
  EXPECT_EQ(acts.back(), Action::raise_to(20000));
  EXPECT_EQ(acts.size(), 2u + (20000 - 200 + 1));
}

TEST(StateTest, HunlLimpCheckReachesFlop) {
  auto g = make_hunl();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::call());
  EXPECT_EQ(s.actor, 1);  // big blind keeps the option
  EXPECT_FALSE(has(legal_actions(s, *g), ActionKind::kFold));
  s = apply_action(s, *g, Action::call());
  EXPECT_TRUE(s.is_chance());
  EXPECT_EQ(s.pot(), 200);
  EXPECT_EQ(cards_to_deal(s, *g), 3);
}

TEST(StateTest, MinRaiseFollowsLastIncrement) {
  auto g = make_hunl();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::raise_to(400));  // increment 300
  auto b = raise_bounds(s, *g);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->first, 700);
  EXPECT_FALSE(is_legal(s, *g, Action::raise_to(600)));
  EXPECT_THROW(apply_action(s, *g, Action::raise_to(600)), IllegalAction);
}

TEST(StateTest, AllInCallRunsOutTheBoard) {
  auto g = make_hunl();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::raise_to(20000));
  s = apply_action(s, *g, Action::call());
  EXPECT_TRUE(s.is_chance());
  Rng rng(3);
  std::vector<Card> deck(52);
  for (int i = 0; i < 52; ++i) deck[i] = i;
  shuffle(rng, deck);
  std::size_t pos = 0;
  int deals = 0;
  while (s.is_chance()) {
    const int k = cards_to_deal(s, *g);
    s = deal(s, *g, std::span<const Card>(deck.data() + pos, k));
    pos += k;
    ++deals;
  }
  EXPECT_TRUE(s.is_terminal());
  EXPECT_EQ(deals, 3);
  EXPECT_EQ(s.board.size(), 5u);
  EXPECT_EQ(s.folder, -1);
  EXPECT_THROW(legal_actions(s, *g), InvalidState);
}

TEST(StateTest, LeducRoundTwoAfterCheck) {
  auto g = make_leduc();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::call());
  s = apply_action(s, *g, Action::call());
  ASSERT_TRUE(s.is_chance());
  const std::vector<Card> board = {g->deck().parse_card("Ks")};
  s = deal(s, *g, board);
  s = apply_action(s, *g, Action::call());
  // Oracle: Leduc's second round facing a check offers check or a bet of 4.
  const auto acts = legal_actions(s, *g);
  ASSERT_EQ(acts.size(), 2u);
  EXPECT_EQ(acts[0], Action::call());
  EXPECT_EQ(acts[1], Action::raise_to(1 + 4));  // ante 1 plus the round-two bet
}

TEST(StateTest, LeducRaiseCap) {
  auto g = make_leduc();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::raise_to(3));
  s = apply_action(s, *g, Action::raise_to(5));
  const auto acts = legal_actions(s, *g);
  EXPECT_EQ(acts.size(), 2u);  // fold, call: two raises per round
  s = apply_action(s, *g, Action::call());
  EXPECT_TRUE(s.is_chance());
  EXPECT_EQ(s.pot(), 10);
}

// Random playouts: chip conservation and replay round-trip.
TEST(StateTest, RandomPlayoutsConserveChipsAndReplay) {
  for (const GamePtr& g : {make_leduc(), make_leduc_nolimit(), make_hunl()}) {
    Rng rng(11);
    for (int it = 0; it < 300; ++it) {
      PublicState s = initial_state(*g);
      while (!s.is_terminal()) {
        if (s.is_chance()) {
          const int k = cards_to_deal(s, *g);
          auto subsets = card_subsets(g->deck().size(), mask_of(s.board) , k);
          s = deal(s, *g, subsets[uniform_int(rng, 0, static_cast<int>(subsets.size()) - 1)]);
          continue;
        }
        const auto acts = legal_actions(s, *g);
        s = apply_action(s, *g, acts[uniform_int(rng, 0, static_cast<int>(acts.size()) - 1)]);
        for (int p = 0; p < 2; ++p) {
          EXPECT_LE(s.total[p], g->stack());
          EXPECT_LE(s.committed[p], s.total[p]);
        }
      }
      const PublicState r = replay(*g, s.betting_string(), s.board);
      EXPECT_EQ(r, s) << s.betting_string();
    }
  }
}

TEST(TerminalTest, FoldMatrixPaysCommittedChips) {
  auto g = make_leduc();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::raise_to(3));
  s = apply_action(s, *g, Action::fold());
  const Matrix u = terminal_utility_matrix(s, *g);
  const HandSpace& hs = g->hands();
  for (int a = 0; a < hs.size(); ++a)
    for (int b = 0; b < hs.size(); ++b)
      EXPECT_EQ(u(a, b), hs.compatible(a, b) ? 1.0 : 0.0);
}

// Independent Leduc showdown oracle: pair with the board wins, else higher
// rank; same rank ties.
double leduc_oracle(const Deck& d, Card a, Card b, Card board, double half_pot) {
  const bool pa = d.rank(a) == d.rank(board), pb = d.rank(b) == d.rank(board);
  if (pa != pb) return pa ? half_pot : -half_pot;
  if (d.rank(a) == d.rank(b)) return 0;
  return d.rank(a) > d.rank(b) ? half_pot : -half_pot;
}

TEST(TerminalTest, LeducShowdownMatchesOracle) {
  auto g = make_leduc();
  const Deck& d = g->deck();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::raise_to(3));
  s = apply_action(s, *g, Action::call());
  for (Card board = 0; board < 6; ++board) {
    PublicState t = deal(s, *g, std::vector<Card>{board});
    t = apply_action(t, *g, Action::call());
    t = apply_action(t, *g, Action::call());
    ASSERT_TRUE(t.is_terminal());
    EXPECT_EQ(t.pot(), 6);
    const Matrix u = terminal_utility_matrix(t, *g);
    for (Card a = 0; a < 6; ++a)
      for (Card b = 0; b < 6; ++b) {
        const bool conflict = a == b || a == board || b == board;
        EXPECT_EQ(u(a, b), conflict ? 0.0 : leduc_oracle(d, a, b, board, 3)) << a << " " << b << " " << board;
      }
  }
}

TEST(TerminalTest, FastValuesMatchDenseProducts) {
  Rng rng(5);
  for (const GamePtr& g : {make_leduc(), make_hunl()}) {
    const int n = g->num_hands();
    for (int it = 0; it < 30; ++it) {
      PublicState s = initial_state(*g);
      while (!s.is_terminal()) {
        if (s.is_chance()) {
          const int k = cards_to_deal(s, *g);
          std::vector<Card> cards;
          while (static_cast<int>(cards.size()) < k) {
            const Card c = uniform_int(rng, 0, g->deck().size() - 1);
            if (!(mask_of(s.board) & card_bit(c)) && std::find(cards.begin(), cards.end(), c) == cards.end())
              cards.push_back(c);
          }
          s = deal(s, *g, cards);
          continue;
        }
        auto acts = legal_actions(s, *g);
        // Bias towards small actions to keep hands going.
        const int pick = uniform_int(rng, 0, std::min<int>(3, static_cast<int>(acts.size()) - 1));
        s = apply_action(s, *g, acts[pick]);
      }
      const CardMask bm = mask_of(s.board);
      Range r1(n), r2(n);
      for (int h = 0; h < n; ++h) {
        const bool blocked = g->hands().mask(h) & bm;
        r1[h] = blocked ? 0 : uniform01(rng);
        r2[h] = blocked ? 0 : uniform01(rng);
      }
      const Matrix u = terminal_utility_matrix(s, *g);
      const BoardOutcomes out(*g, s.board);
      std::vector<double> v1(n), v2(n);
      terminal_values(s, *g, out, r1, r2, v1, v2);
      for (int a = 0; a < n; ++a) {
        if (g->hands().mask(a) & bm) continue;
        double e1 = 0, e2 = 0;
        for (int b = 0; b < n; ++b) {
          e1 += u(a, b) * r2[b];
          e2 -= r1[b] * u(b, a);
        }
        ASSERT_NEAR(v1[a], e1, 1e-12 * (1 + std::abs(e1)));
        ASSERT_NEAR(v2[a], e2, 1e-12 * (1 + std::abs(e2)));
      }
      // Zero-sum: r1.v1 + r2.v2 = 0.
      double z = 0, scale = 0;
      for (int h = 0; h < n; ++h) {
        z += r1[h] * v1[h] + r2[h] * v2[h];
        scale += std::abs(r1[h] * v1[h]);
      }
      EXPECT_NEAR(z, 0, 1e-12 * (1 + scale));
    }
  }
}

TEST(HandStrengthTest, Examples) {
  auto g = make_leduc();
  const Deck& d = g->deck();
  // King with a queen board: beats J (2), ties K (1), loses to the queen (1).
  const std::vector<Card> hand = {d.parse_card("Ks")}, board = {d.parse_card("Qs")};
  EXPECT_DOUBLE_EQ(hand_strength(*g, hand, board), (2 + 0.5) / 4);
  // Pairing the board is the nuts bar nothing.
  const std::vector<Card> pair = {d.parse_card("Qh")};
  EXPECT_DOUBLE_EQ(hand_strength(*g, pair, board), 1.0);
  EXPECT_THROW(hand_strength(*g, board, board), Error);
  // Symmetric toy deck: two cards of one rank, no board.
  auto toy = parse_game_config("ranks = A\nsuits = sh\nante = 1\nstack = 2\nbetting = limit\nround = 0 0 1 1\n");
  EXPECT_DOUBLE_EQ(hand_strength(*toy, std::vector<Card>{0}, {}), 0.5);
  // Best hold'em hand on a board.
  auto hunl = make_hunl();
  const auto b5 = hunl->deck().parse_cards("2c7d9hTsJs");
  const auto royal = hunl->deck().parse_cards("AsKs");
  EXPECT_LT(hand_strength(*hunl, hunl->deck().parse_cards("QsKs"), b5), 1.0);  // straight flush K-high
  EXPECT_GT(hand_strength(*hunl, hunl->deck().parse_cards("QsKs"), b5), 0.99);
  (void)royal;
}

TEST(HandRankTest, HoldemCategories) {
  auto g = make_hunl();
  const Deck& d = g->deck();
  auto rank = [&](const char* h, const char* b) { return g->rank(d.parse_cards(h), d.parse_cards(b)); };
  const char* board = "2c3d4h9sKc";
  EXPECT_GT(rank("5c6d", board), rank("KdKh", board));   // straight > trips
  EXPECT_GT(rank("KdKh", board), rank("9d9c", board));   // trips > two-ish pair
  EXPECT_GT(rank("Ac5d", board), rank("AdQd", board));   // wheel > ace high
  EXPECT_EQ(rank("Ah7h", board), rank("As7s", board));   // suit-symmetric
  EXPECT_GT(rank("AcQc", "2c3c9cTdJd"), rank("5d6d", "2c3c9cTdJd"));
}

TEST(HandHistoryTest, RoundTrip) {
  auto g = make_leduc();
  const Deck& d = g->deck();
  PublicState s = initial_state(*g);
  s = apply_action(s, *g, Action::raise_to(3));
  s = apply_action(s, *g, Action::call());
  s = deal(s, *g, std::vector<Card>{d.parse_card("Qs")});
  s = apply_action(s, *g, Action::call());
  s = apply_action(s, *g, Action::call());
  HandRecord rec;
  rec.index = 7;
  rec.betting = s.betting_string();
  rec.hole[0] = {d.parse_card("Qh")};
  rec.hole[1] = {d.parse_card("Ks")};
  rec.board = s.board;
  rec.names = {"a", "b"};
  const auto net = terminal_net(*g, s, rec.hole);
  rec.net = net;
  EXPECT_EQ(net[0], 3);
  EXPECT_EQ(net[1], -3);
  const std::string line = format_hand(*g, rec);
  const HandRecord back = parse_hand(*g, line);
  EXPECT_EQ(format_hand(*g, back), line);
  EXPECT_EQ(replay_hand(*g, back), s);
  HandRecord bad = back;
  bad.net = {4, -4};
  EXPECT_THROW(replay_hand(*g, bad), Error);
}

}  // namespace
}  // namespace dstack
