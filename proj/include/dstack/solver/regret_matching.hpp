#pragma once

#include <span>
#include <vector>

#include "dstack/core/error.hpp"

namespace dstack {

// sigma(a) = R(a)^+ / sum R^+, uniform when no regret is positive.
inline void regret_matching_plus(std::span<const double> regrets, std::span<double> out) {
  if (regrets.empty()) throw Error("regret matching over an empty action set");
  double total = 0;
  for (double r : regrets) total += r > 0 ? r : 0;
  if (total > 0) {
    for (std::size_t a = 0; a < regrets.size(); ++a) out[a] = regrets[a] > 0 ? regrets[a] / total : 0;
  } else {
    const double u = 1.0 / static_cast<double>(regrets.size());
    for (std::size_t a = 0; a < regrets.size(); ++a) out[a] = u;
  }
}

inline std::vector<double> regret_matching_plus(std::span<const double> regrets) {
  std::vector<double> out(regrets.size());
  regret_matching_plus(regrets, out);
  return out;
}

}  // namespace dstack
