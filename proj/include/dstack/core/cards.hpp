#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dstack/core/error.hpp"

namespace dstack {

// A card is an index into the game's deck: rank * num_suits + suit, with
// ranks ordered from weakest to strongest.
using Card = int;
using CardMask = std::uint64_t;

inline CardMask card_bit(Card c) { return CardMask{1} << c; }

inline CardMask mask_of(std::span<const Card> cards) {
  CardMask m = 0;
  for (Card c : cards) m |= card_bit(c);
  return m;
}

// Rank and suit alphabet of a deck. Decks are limited to 64 cards so hands
// and boards fit in a CardMask.
class Deck {
 public:
  Deck() = default;
  Deck(std::string ranks, std::string suits)
      : ranks_(std::move(ranks)), suits_(std::move(suits)) {
    if (ranks_.empty() || suits_.empty())
      throw Error("deck needs at least one rank and one suit");
    if (size() > 64) throw Error("deck larger than 64 cards is unsupported");
  }

  int size() const { return num_ranks() * num_suits(); }
  int num_ranks() const { return static_cast<int>(ranks_.size()); }
  int num_suits() const { return static_cast<int>(suits_.size()); }
  int rank(Card c) const { return c / num_suits(); }
  int suit(Card c) const { return c % num_suits(); }
  Card make(int rank, int suit) const { return rank * num_suits() + suit; }
  const std::string& ranks() const { return ranks_; }
  const std::string& suits() const { return suits_; }

  std::string card_string(Card c) const {
    return std::string{ranks_[rank(c)], suits_[suit(c)]};
  }

  std::string cards_string(std::span<const Card> cards) const {
    std::string s;
    for (Card c : cards) s += card_string(c);
    return s;
  }

  Card parse_card(std::string_view s) const {
    if (s.size() != 2) throw Error("bad card '" + std::string(s) + "'");
    const auto r = ranks_.find(s[0]);
    const auto u = suits_.find(s[1]);
    if (r == std::string::npos || u == std::string::npos)
      throw Error("bad card '" + std::string(s) + "'");
    return make(static_cast<int>(r), static_cast<int>(u));
  }

  // Parses a concatenation of two-character cards, e.g. "KhQs".
  std::vector<Card> parse_cards(std::string_view s) const {
    if (s.size() % 2 != 0) throw Error("bad card list '" + std::string(s) + "'");
    std::vector<Card> out;
    for (std::size_t i = 0; i < s.size(); i += 2) out.push_back(parse_card(s.substr(i, 2)));
    return out;
  }

 private:
  std::string ranks_;
  std::string suits_;
};

// Canonical enumeration of private hands: sorted card tuples in
// lexicographic order. Every Range and CfvVector is indexed by this order.
class HandSpace {
 public:
  HandSpace() = default;
  HandSpace(int deck_size, int cards_per_hand)
      : deck_size_(deck_size), cards_per_hand_(cards_per_hand) {
    if (cards_per_hand < 1 || cards_per_hand > 2)
      throw Error("only 1 or 2 private cards per player are supported");
    with_card_.resize(deck_size);
    if (cards_per_hand == 1) {
      for (Card c = 0; c < deck_size; ++c) add({c});
    } else {
      for (Card a = 0; a < deck_size; ++a)
        for (Card b = a + 1; b < deck_size; ++b) add({a, b});
    }
  }

  int size() const { return static_cast<int>(masks_.size()); }
  int cards_per_hand() const { return cards_per_hand_; }
  int deck_size() const { return deck_size_; }
  CardMask mask(int hand) const { return masks_[hand]; }
  std::span<const Card> cards(int hand) const {
    return {cards_.data() + static_cast<std::size_t>(hand) * cards_per_hand_,
            static_cast<std::size_t>(cards_per_hand_)};
  }
  const std::vector<int>& hands_with_card(Card c) const { return with_card_[c]; }

  // Index of a hand given its cards in any order; -1 if malformed.
  int index(std::span<const Card> hand) const {
    if (static_cast<int>(hand.size()) != cards_per_hand_) return -1;
    std::vector<Card> sorted(hand.begin(), hand.end());
    std::sort(sorted.begin(), sorted.end());
    for (Card c : sorted)
      if (c < 0 || c >= deck_size_) return -1;
    if (cards_per_hand_ == 1) return sorted[0];
    if (sorted[0] == sorted[1]) return -1;
    const int a = sorted[0], b = sorted[1], n = deck_size_;
    // Offset of the block starting with card a, plus position of b in it.
    return a * n - a * (a + 1) / 2 + (b - a - 1);
  }

  bool compatible(int h1, int h2) const { return (masks_[h1] & masks_[h2]) == 0; }

  // 1.0 for hands disjoint from the board, 0.0 otherwise.
  std::vector<double> board_mask(CardMask board) const {
    std::vector<double> m(size());
    for (int h = 0; h < size(); ++h) m[h] = (masks_[h] & board) ? 0.0 : 1.0;
    return m;
  }

 private:
  void add(std::initializer_list<Card> cs) {
    const int id = size();
    CardMask m = 0;
    for (Card c : cs) {
      cards_.push_back(c);
      m |= card_bit(c);
      with_card_[c].push_back(id);
    }
    masks_.push_back(m);
  }

  int deck_size_ = 0;
  int cards_per_hand_ = 0;
  std::vector<Card> cards_;
  std::vector<CardMask> masks_;
  std::vector<std::vector<int>> with_card_;
};

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// All k-subsets of the cards not in `exclude`, each sorted ascending, in
// lexicographic order.
inline std::vector<std::vector<Card>> card_subsets(int deck_size, CardMask exclude, int k) {
  std::vector<Card> avail;
  for (Card c = 0; c < deck_size; ++c)
    if (!(exclude & card_bit(c))) avail.push_back(c);
  std::vector<std::vector<Card>> out;
  if (k == 0) {
    out.emplace_back();
    return out;
  }
  const int n = static_cast<int>(avail.size());
  if (k > n) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    std::vector<Card> s(k);
    for (int i = 0; i < k; ++i) s[i] = avail[idx[i]];
    out.push_back(std::move(s));
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace dstack
