#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "dstack/core/cards.hpp"

namespace dstack {

enum class ShowdownRule {
  kHighCard,   // highest private card wins (Kuhn)
  kPairBoard,  // pairing the board beats any unpaired hand, then high card (Leduc)
  kHoldem,     // best five-card poker hand from private + board cards
};

namespace detail {

// Packs a category and up to five kicker ranks into a comparable integer.
inline std::uint32_t pack_rank(int category, std::span<const int> kickers) {
  std::uint32_t v = static_cast<std::uint32_t>(category);
  for (int i = 0; i < 5; ++i) {
    v <<= 4;
    if (i < static_cast<int>(kickers.size())) v |= static_cast<std::uint32_t>(kickers[i] + 1);
  }
  return v;
}

// Highest straight top rank in a rank bitmask, or -1. With a full 13-rank deck
// the top rank may also play low (wheel).
inline int straight_top(std::uint32_t ranks, int num_ranks) {
  for (int top = num_ranks - 1; top >= 4; --top) {
    const std::uint32_t need = 0x1Fu << (top - 4);
    if ((ranks & need) == need) return top;
  }
  if (num_ranks == 13) {
    const std::uint32_t wheel = 0xFu | (1u << 12);
    if ((ranks & wheel) == wheel) return 3;
  }
  return -1;
}

// Poker hand value of 2..7 cards. Straights and flushes need five cards.
inline std::uint32_t holdem_rank(const Deck& deck, std::span<const Card> cards) {
  const int nr = deck.num_ranks();
  std::array<int, 16> count{};
  std::array<std::uint32_t, 8> suit_ranks{};
  std::array<int, 8> suit_count{};
  std::uint32_t all_ranks = 0;
  for (Card c : cards) {
    const int r = deck.rank(c), s = deck.suit(c);
    ++count[r];
    suit_ranks[s] |= 1u << r;
    ++suit_count[s];
    all_ranks |= 1u << r;
  }
  if (cards.size() >= 5) {
    for (int s = 0; s < deck.num_suits(); ++s) {
      if (suit_count[s] >= 5) {
        const int sf = straight_top(suit_ranks[s], nr);
        if (sf >= 0) {
          const int k[1] = {sf};
          return pack_rank(8, k);
        }
      }
    }
  }
  int quad = -1, trips[2] = {-1, -1}, pairs[3] = {-1, -1, -1};
  int nt = 0, np = 0;
  for (int r = nr - 1; r >= 0; --r) {
    if (count[r] == 4 && quad < 0) quad = r;
    else if (count[r] == 3 && nt < 2) trips[nt++] = r;
    else if (count[r] == 2 && np < 3) pairs[np++] = r;
  }
  auto kickers_excluding = [&](int a, int b, int want, int* out) {
    int n = 0;
    for (int r = nr - 1; r >= 0 && n < want; --r)
      if (count[r] > 0 && r != a && r != b) out[n++] = r;
    return n;
  };
  if (quad >= 0) {
    int k[2] = {quad, -1};
    kickers_excluding(quad, -1, 1, k + 1);
    return pack_rank(7, std::span<const int>(k, k[1] >= 0 ? 2 : 1));
  }
  if (nt >= 1 && (nt >= 2 || np >= 1)) {
    const int pair = nt >= 2 ? std::max(trips[1], pairs[0]) : pairs[0];
    const int k[2] = {trips[0], pair};
    return pack_rank(6, k);
  }
  if (cards.size() >= 5) {
    for (int s = 0; s < deck.num_suits(); ++s) {
      if (suit_count[s] >= 5) {
        int k[5], n = 0;
        for (int r = nr - 1; r >= 0 && n < 5; --r)
          if (suit_ranks[s] & (1u << r)) k[n++] = r;
        return pack_rank(5, k);
      }
    }
    const int st = straight_top(all_ranks, nr);
    if (st >= 0) {
      const int k[1] = {st};
      return pack_rank(4, k);
    }
  }
  if (nt >= 1) {
    int k[3] = {trips[0], -1, -1};
    const int n = kickers_excluding(trips[0], -1, 2, k + 1);
    return pack_rank(3, std::span<const int>(k, 1 + n));
  }
  if (np >= 2) {
    int k[3] = {pairs[0], pairs[1], -1};
    const int n = kickers_excluding(pairs[0], pairs[1], 1, k + 2);
    return pack_rank(2, std::span<const int>(k, 2 + n));
  }
  if (np == 1) {
    int k[4] = {pairs[0], -1, -1, -1};
    const int n = kickers_excluding(pairs[0], -1, 3, k + 1);
    return pack_rank(1, std::span<const int>(k, 1 + n));
  }
  int k[5], n = 0;
  for (int r = nr - 1; r >= 0 && n < 5; --r)
    if (count[r] > 0) k[n++] = r;
  return pack_rank(0, std::span<const int>(k, n));
}

}  // namespace detail

// Showdown strength of a private hand on a board; larger is better. Values
// are comparable only between hands on the same board.
inline std::uint32_t showdown_rank(ShowdownRule rule, const Deck& deck,
                                   std::span<const Card> hand,
                                   std::span<const Card> board) {
  switch (rule) {
    case ShowdownRule::kHighCard: {
      int best = -1;
      for (Card c : hand) best = std::max(best, deck.rank(c));
      return static_cast<std::uint32_t>(best);
    }
    case ShowdownRule::kPairBoard: {
      int best = -1;
      bool paired = false;
      for (Card c : hand) {
        best = std::max(best, deck.rank(c));
        for (Card b : board)
          if (deck.rank(b) == deck.rank(c)) paired = true;
      }
      return (paired ? 1000u : 0u) + static_cast<std::uint32_t>(best);
    }
    case ShowdownRule::kHoldem: {
      std::array<Card, 7> all{};
      std::size_t n = 0;
      for (Card c : hand) all[n++] = c;
      for (Card c : board) all[n++] = c;
      return detail::holdem_rank(deck, std::span<const Card>(all.data(), n));
    }
  }
  return 0;
}

}  // namespace dstack
