#pragma once

#include <span>
#include <vector>

#include "dstack/core/error.hpp"

namespace dstack {

// Per-hand regrets of the opponent's Follow/Terminate choice in the re-solving
// gadget.
struct GadgetState {
  std::vector<double> follow;     // R_G(F|h)
  std::vector<double> terminate;  // R_G(T|h)

  explicit GadgetState(int hands = 0) : follow(hands, 0.0), terminate(hands, 0.0) {}

  // sigma_G(F|h) by regret matching+ (1/2 at zero regrets).
  std::vector<double> follow_probability() const {
    std::vector<double> f(follow.size());
    for (std::size_t h = 0; h < f.size(); ++h) {
      const double a = follow[h] > 0 ? follow[h] : 0, b = terminate[h] > 0 ? terminate[h] : 0;
      f[h] = a + b > 0 ? a / (a + b) : 0.5;
    }
    return f;
  }
};

// One gadget update. `v2` holds the opponent's counterfactual values of
// following into the subgame this iteration, `w` the constraint values.
// Returns the follow probabilities used this iteration (the entry range
// r2^t) and, through `vg`, the gadget value per hand.
inline std::vector<double> gadget_step(GadgetState& g, std::span<const double> w, std::span<const double> v2,
                                       std::vector<double>* vg = nullptr) {
  if (w.size() != g.follow.size() || v2.size() != g.follow.size()) throw Error("gadget vectors misaligned");
  std::vector<double> f = g.follow_probability();
  if (vg) vg->resize(f.size());
  for (std::size_t h = 0; h < f.size(); ++h) {
    const double v = f[h] * v2[h] + (1 - f[h]) * w[h];
    if (vg) (*vg)[h] = v;
    const double t = g.terminate[h] + w[h] - v, fo = g.follow[h] + v2[h] - v;
    g.terminate[h] = t > 0 ? t : 0;
    g.follow[h] = fo > 0 ? fo : 0;
  }
  return f;
}

}  // namespace dstack
