#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/matrix.hpp"
#include "dstack/core/state.hpp"

namespace dstack {

using Range = std::vector<double>;
using CfvVector = std::vector<double>;

struct CfvPair {
  CfvVector v1;
  CfvVector v2;
};

// Pairwise showdown outcomes on one board, from seat 0's point of view.
class BoardOutcomes {
 public:
  enum Code : std::int8_t { kConflict = 0, kWin = 1, kLose = 2, kTie = 3 };

  BoardOutcomes(const GameSpec& g, std::span<const Card> board) : n_(g.num_hands()) {
    const HandSpace& hs = g.hands();
    board_mask_ = mask_of(board);
    valid_.assign(n_, 0);
    ranks_.assign(n_, 0);
    for (int h = 0; h < n_; ++h) {
      if (hs.mask(h) & board_mask_) continue;
      valid_[h] = 1;
      ranks_[h] = g.rank(hs.cards(h), board);
    }
    codes_.assign(static_cast<std::size_t>(n_) * n_, kConflict);
    for (int a = 0; a < n_; ++a) {
      if (!valid_[a]) continue;
      for (int b = 0; b < n_; ++b) {
        if (!valid_[b] || !hs.compatible(a, b)) continue;
        codes_[static_cast<std::size_t>(a) * n_ + b] =
            ranks_[a] > ranks_[b] ? kWin : (ranks_[a] < ranks_[b] ? kLose : kTie);
      }
    }
  }

  int size() const { return n_; }
  Code code(int h1, int h2) const { return static_cast<Code>(codes_[static_cast<std::size_t>(h1) * n_ + h2]); }
  const std::int8_t* row(int h1) const { return codes_.data() + static_cast<std::size_t>(h1) * n_; }
  bool valid(int h) const { return valid_[h] != 0; }
  std::uint32_t rank(int h) const { return ranks_[h]; }
  CardMask board_mask() const { return board_mask_; }

 private:
  int n_;
  CardMask board_mask_ = 0;
  std::vector<std::uint8_t> valid_;
  std::vector<std::uint32_t> ranks_;
  std::vector<std::int8_t> codes_;
};

// Thread-safe cache of BoardOutcomes keyed by board.
class OutcomeCache {
 public:
  explicit OutcomeCache(GamePtr g) : g_(std::move(g)) {}

  std::shared_ptr<const BoardOutcomes> get(std::span<const Card> board) {
    std::vector<Card> key(board.begin(), board.end());
    std::sort(key.begin(), key.end());
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto b = std::make_shared<const BoardOutcomes>(*g_, board);
    cache_.emplace(std::move(key), b);
    return b;
  }

 private:
  GamePtr g_;
  std::mutex mu_;
  std::map<std::vector<Card>, std::shared_ptr<const BoardOutcomes>> cache_;
};

// Dense payoff matrix U_S for seat 0 at a terminal state. Entries for pairs
// that share a card, or conflict with the board, are zero. Seat 1's matrix is
// the negated transpose.
inline Matrix terminal_utility_matrix(const PublicState& s, const GameSpec& g) {
  if (!s.is_terminal()) throw InvalidState("terminal_utility_matrix on a non-terminal state");
  const BoardOutcomes out(g, s.board);
  const int n = g.num_hands();
  Matrix u(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const auto code = out.code(a, b);
      if (code == BoardOutcomes::kConflict) continue;
      if (s.folder >= 0) {
        u(a, b) = s.folder == 1 ? s.total[1] : -s.total[0];
      } else if (code == BoardOutcomes::kWin) {
        u(a, b) = s.total[1];
      } else if (code == BoardOutcomes::kLose) {
        u(a, b) = -s.total[0];
      } else {
        u(a, b) = (s.total[1] - s.total[0]) / 2;
      }
    }
  }
  return u;
}

// Counterfactual values at a terminal: v1 = U r2 and v2 = -(r1^T U), both
// from the owning player's point of view. Fold nodes use per-card removal
// sums (linear time); showdowns use the dense outcome table.
inline void terminal_values(const PublicState& s, const GameSpec& g, const BoardOutcomes& out,
                            std::span<const double> r1, std::span<const double> r2,
                            std::span<double> v1, std::span<double> v2) {
  const int n = g.num_hands();
  const HandSpace& hs = g.hands();
  if (s.folder >= 0) {
    // Opponent mass compatible with each hand via inclusion-exclusion over
    // the hand's cards.
    const Chips win1 = s.folder == 1 ? s.total[1] : -s.total[0];
    auto compat_mass = [&](std::span<const double> r, std::span<double> dst, double scale) {
      std::vector<double> card_sum(hs.deck_size(), 0.0);
      double total = 0;
      for (int h = 0; h < n; ++h) {
        if (!out.valid(h)) continue;
        total += r[h];
        for (Card c : hs.cards(h)) card_sum[c] += r[h];
      }
      for (int h = 0; h < n; ++h) {
        if (!out.valid(h)) {
          dst[h] = 0;
          continue;
        }
        double m = total;
        for (Card c : hs.cards(h)) m -= card_sum[c];
        if (hs.cards_per_hand() == 2) m += r[h];
        dst[h] = scale * m;
      }
    };
    compat_mass(r2, v1, win1);
    compat_mass(r1, v2, -win1);
    return;
  }
  const double win = s.total[1], lose = -s.total[0], tie = (s.total[1] - s.total[0]) / 2;
  const double table[4] = {0.0, win, lose, tie};
  std::fill(v1.begin(), v1.end(), 0.0);
  std::fill(v2.begin(), v2.end(), 0.0);
  for (int a = 0; a < n; ++a) {
    if (!out.valid(a)) continue;
    const std::int8_t* row = out.row(a);
    double acc = 0;
    const double ra = r1[a];
    for (int b = 0; b < n; ++b) {
      const double u = table[row[b]];
      acc += u * r2[b];
      v2[b] -= ra * u;
    }
    v1[a] = acc;
  }
}

// Probability that `hand` beats a uniformly random opponent hand consistent
// with the board and the hand itself; ties count one half.
inline double hand_strength(const GameSpec& g, std::span<const Card> hand, std::span<const Card> board) {
  const HandSpace& hs = g.hands();
  const int h = hs.index(hand);
  if (h < 0) throw Error("malformed hand");
  const CardMask bm = mask_of(board);
  if (hs.mask(h) & bm) throw Error("hand conflicts with the board");
  const auto mine = g.rank(hand, board);
  double score = 0;
  int count = 0;
  for (int o = 0; o < hs.size(); ++o) {
    if ((hs.mask(o) & bm) || !hs.compatible(h, o)) continue;
    const auto theirs = g.rank(hs.cards(o), board);
    score += mine > theirs ? 1.0 : (mine == theirs ? 0.5 : 0.0);
    ++count;
  }
  return count ? score / count : 0.0;
}

// Hand strength of every hand on a board (0 for board-blocked hands).
inline std::vector<double> all_hand_strengths(const GameSpec& g, std::span<const Card> board) {
  const BoardOutcomes out(g, board);
  const int n = g.num_hands();
  std::vector<double> s(n, 0.0);
  for (int a = 0; a < n; ++a) {
    if (!out.valid(a)) continue;
    double score = 0;
    int count = 0;
    for (int b = 0; b < n; ++b) {
      const auto c = out.code(a, b);
      if (c == BoardOutcomes::kConflict) continue;
      score += c == BoardOutcomes::kWin ? 1.0 : (c == BoardOutcomes::kTie ? 0.5 : 0.0);
      ++count;
    }
    s[a] = count ? score / count : 0.0;
  }
  return s;
}

}  // namespace dstack
