#pragma once

#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/terminal.hpp"

namespace dstack {

// Hand -> bucket on one board; hands the board blocks map to -1.
struct BucketMap {
  int k = 0;
  std::vector<int> bucket;

  // Sums a hand-indexed vector into buckets.
  std::vector<double> pool(std::span<const double> hands) const {
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    for (std::size_t h = 0; h < bucket.size(); ++h)
      if (bucket[h] >= 0) out[bucket[h]] += hands[h];
    return out;
  }

  // Each allowed hand takes its bucket's value; blocked hands get 0.
  std::vector<double> spread(std::span<const double> buckets) const {
    std::vector<double> out(bucket.size(), 0.0);
    for (std::size_t h = 0; h < bucket.size(); ++h)
      if (bucket[h] >= 0) out[h] = buckets[bucket[h]];
    return out;
  }
};

// Hand-strength quantile buckets: allowed hands sorted by strength, the i-th
// of n falling in bucket floor(i*K/n); a group of equal-strength hands takes
// the bucket of its first member.
inline BucketMap bucket_hands(const GameSpec& g, std::span<const Card> board, int k) {
  const int n = g.num_hands();
  if (k < 1 || k > n) throw Error("bucket count must be in [1, hand count]");
  const auto strength = all_hand_strengths(g, board);
  const CardMask bm = mask_of(board);
  std::vector<int> order;
  for (int h = 0; h < n; ++h)
    if (!(g.hands().mask(h) & bm)) order.push_back(h);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return strength[a] < strength[b]; });
  BucketMap m;
  m.k = k;
  m.bucket.assign(n, -1);
  const std::size_t allowed = order.size();
  int current = -1;
  for (std::size_t i = 0; i < allowed; ++i) {
    const int h = order[i];
    if (i == 0 || strength[h] != strength[order[i - 1]])
      current = static_cast<int>(i * static_cast<std::size_t>(k) / allowed);
    m.bucket[h] = current;
  }
  return m;
}

// Bucket maps by board, built on demand.
class BucketCache {
 public:
  BucketCache(GamePtr game, int k) : game_(std::move(game)), k_(k) {}

  const BucketMap& get(std::span<const Card> board) const {
    const CardMask key = mask_of(board);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = maps_.find(key);
    if (it == maps_.end()) it = maps_.emplace(key, bucket_hands(*game_, board, k_)).first;
    return it->second;
  }

 private:
  GamePtr game_;
  int k_;
  mutable std::mutex mu_;
  mutable std::map<CardMask, BucketMap> maps_;
};

}  // namespace dstack
