#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/core/state.hpp"
#include "dstack/core/terminal.hpp"

namespace dstack {

// A random training situation at the start of a round: public cards, pot and
// both players' ranges (each normalized to 1 over the hands the board allows).
struct Situation {
  int round = 0;
  std::vector<Card> board;
  Chips pot = 0;
  Range r1, r2;

  friend bool operator==(const Situation&, const Situation&) = default;
};

// Picks a configured pot interval uniformly, then a uniform integer inside it.
inline Chips sample_pot(const GameSpec& g, Rng& rng) {
  const auto& iv = g.pot_intervals();
  if (iv.empty()) throw Error("game has no pot intervals");
  const PotInterval& p = iv[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(iv.size()) - 1))];
  return static_cast<Chips>(uniform_int(rng, static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi)));
}

// Random range over `hands` (ordered weakest first) with total mass p: split
// the mass uniformly between the weaker and the stronger half, recursively.
inline void random_range(std::span<const int> hands, double p, Rng& rng, Range& out) {
  if (hands.empty()) throw Error("random_range needs at least one hand");
  if (p < 0 || p > 1) throw Error("random_range mass outside [0, 1]");
  if (hands.size() == 1) {
    out[hands[0]] = p;
    return;
  }
  const std::size_t lo = hands.size() / 2;
  const double p1 = p * uniform_open01(rng);
  random_range(hands.subspan(0, lo), p1, rng, out);
  random_range(hands.subspan(lo), p - p1, rng, out);
}

// Hands the board allows, weakest first (ties by index). Strength is the
// win-plus-half-tie probability against a uniform opponent.
inline std::vector<int> hands_by_strength(const GameSpec& g, std::span<const Card> board) {
  const auto s = all_hand_strengths(g, board);
  const CardMask bm = mask_of(board);
  std::vector<int> order;
  for (int h = 0; h < g.num_hands(); ++h)
    if (!(g.hands().mask(h) & bm)) order.push_back(h);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[a] < s[b]; });
  return order;
}

inline Situation sample_situation(const GameSpec& g, int round, Rng& rng) {
  if (round < 0 || round >= g.num_rounds()) throw Error("situation round out of range");
  Situation sit;
  sit.round = round;
  const int nb = g.board_cards_before_round(round);
  std::vector<Card> deck(static_cast<std::size_t>(g.deck().size()));
  std::iota(deck.begin(), deck.end(), 0);
  shuffle(rng, deck);
  sit.board.assign(deck.begin(), deck.begin() + nb);
  std::sort(sit.board.begin(), sit.board.end());
  sit.pot = sample_pot(g, rng);
  const auto order = hands_by_strength(g, sit.board);
  sit.r1.assign(g.num_hands(), 0.0);
  sit.r2.assign(g.num_hands(), 0.0);
  random_range(order, 1.0, rng, sit.r1);
  random_range(order, 1.0, rng, sit.r2);
  return sit;
}

// First decision state of `round` with the given board and an even pot split.
inline PublicState situation_state(const GameSpec& g, int round, std::span<const Card> board, Chips pot) {
  if (static_cast<int>(board.size()) != g.board_cards_before_round(round)) throw Error("board does not fit the round");
  if (pot / 2 > g.stack() || pot <= 0) throw Error("pot outside the game's limits");
  PublicState s = initial_state(g);
  s.round = round;
  s.board.assign(board.begin(), board.end());
  s.betting.assign(static_cast<std::size_t>(round) + 1, {});
  s.total = {pot / 2, pot / 2};
  s.committed = {0, 0};
  s.raises_this_round = 0;
  s.last_raise = 0;
  if (round == 0) {
    // Blinds stay as posted; extra pot is dead money.
    s = initial_state(g);
    const Chips extra = pot / 2 - s.total[1];
    if (extra < 0) throw Error("pot smaller than the blinds");
    s.total[0] += extra;
    s.total[1] += extra;
    return s;
  }
  s.actor = g.round(round).first_actor;
  if (!detail::betting_possible(g, s)) throw Error("no betting possible at this pot");
  return s;
}

inline PublicState situation_state(const GameSpec& g, const Situation& sit) {
  return situation_state(g, sit.round, sit.board, sit.pot);
}

}  // namespace dstack
