#pragma once

#include <numeric>
#include <span>
#include <vector>

#include "dstack/core/state.hpp"
#include "dstack/core/terminal.hpp"

namespace dstack {

// Counterfactual values at a depth-limit state. Both ranges are reach
// vectors over the game's canonical hand order; outputs are chip-valued
// counterfactual values from each owner's point of view, zero for hands
// blocked by the board. Implementations must be safe for concurrent calls.
class ValueFn {
 public:
  virtual ~ValueFn() = default;
  virtual CfvPair evaluate(const PublicState& s, std::span<const double> r1, std::span<const double> r2,
                           Chips pot) const = 0;
};

using ValueFnPtr = std::shared_ptr<const ValueFn>;

// Shifts both vectors so that r1.v1 + r2.v2 = 0. Half of the excess is
// removed from each player, spread uniformly over that player's range mass.
inline void zero_sum_layer(std::span<double> v1, std::span<double> v2, std::span<const double> r1,
                           std::span<const double> r2) {
  double s = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    s += r1[i] * v1[i];
    m1 += r1[i];
  }
  for (std::size_t i = 0; i < v2.size(); ++i) {
    s += r2[i] * v2[i];
    m2 += r2[i];
  }
  double c1 = 0, c2 = 0;
  if (m1 > 0 && m2 > 0) {
    c1 = s / (2 * m1);
    c2 = s / (2 * m2);
  } else if (m1 > 0) {
    c1 = s / m1;
  } else if (m2 > 0) {
    c2 = s / m2;
  }
  for (double& x : v1) x -= c1;
  for (double& x : v2) x -= c2;
}

inline CfvPair zero_sum_layer(const CfvVector& v1, const CfvVector& v2, const Range& r1, const Range& r2) {
  CfvPair out{v1, v2};
  zero_sum_layer(std::span<double>(out.v1), std::span<double>(out.v2), std::span<const double>(r1),
                 std::span<const double>(r2));
  return out;
}

inline double range_sum(std::span<const double> r) { return std::accumulate(r.begin(), r.end(), 0.0); }

}  // namespace dstack
