#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "dstack/core/error.hpp"
#include "dstack/core/terminal.hpp"
#include "dstack/solver/strategy.hpp"

namespace dstack {

struct BestResponseReport {
  double br[2] = {0, 0};     // expected chips of a best response in each seat
  double exploitability = 0;  // (br[0] + br[1]) / 2, chips per game
  double mbb = 0;             // exploitability in milli-big-blinds per game
};

// Exact best response against a policy, by a vectorized full-width walk of
// the public tree. The best responder considers every legal action; opponent
// branches with zero reach are pruned. For public policies (independent of
// cards and board) actions are skipped when a betting-only bound proves they
// cannot beat the best action found so far, which keeps always-fold-style
// opponents tractable in large no-limit games. The bound is applied with a
// 1e-12 relative slack so rounding in the value sums cannot defeat it.
class BestResponse {
 public:
  BestResponse(GamePtr game, const Policy& policy, std::size_t max_nodes = 20'000'000)
      : game_(std::move(game)), policy_(policy), outcomes_(game_), max_nodes_(max_nodes) {}

  // Counterfactual best-response values of seat `p` at `s` against opponent
  // reach `ro`.
  std::vector<double> values(const PublicState& s, int p, const std::vector<double>& ro) {
    visited_ = 0;
    return walk(s, p, ro);
  }

  BestResponseReport run() {
    const GameSpec& g = *game_;
    const int n = g.num_hands();
    const PublicState root = initial_state(g);
    // Unit opponent reach keeps integer payoffs exact; the deal probability
    // is applied once at the end.
    const std::vector<double> ones(n, 1.0);
    const double deals = static_cast<double>(n) *
                         static_cast<double>(binomial(g.deck().size() - g.hands().cards_per_hand(), g.hands().cards_per_hand()));
    BestResponseReport rep;
    for (int p = 0; p < 2; ++p) {
      const auto v = values(root, p, ones);
      double s = 0;
      for (int h = 0; h < n; ++h) s += v[h];
      rep.br[p] = s / deals;
    }
    rep.exploitability = (rep.br[0] + rep.br[1]) / 2;
    rep.mbb = rep.exploitability * 1000.0 / g.unit();
    return rep;
  }

  std::size_t nodes_visited() const { return visited_; }

 private:
  void tick() {
    if (++visited_ > max_nodes_)
      throw GameTooLarge("best response exceeds " + std::to_string(max_nodes_) + " nodes");
  }

  std::vector<double> walk(const PublicState& s, int p, const std::vector<double>& ro) {
    tick();
    const GameSpec& g = *game_;
    const int n = g.num_hands();
    std::vector<double> v(n, 0.0);
    if (s.is_terminal()) {
      auto out = outcomes_.get(s.board);
      std::vector<double> zeros(n, 0.0), other(n, 0.0);
      if (p == 0)
        terminal_values(s, g, *out, zeros, ro, v, other);
      else
        terminal_values(s, g, *out, ro, zeros, other, v);
      return v;
    }
    if (std::all_of(ro.begin(), ro.end(), [](double x) { return x == 0; })) return v;
    if (s.is_chance()) {
      const int k = cards_to_deal(s, g);
      const int live = g.deck().size() - static_cast<int>(s.board.size()) - 2 * g.hands().cards_per_hand();
      const double w = 1.0 / static_cast<double>(binomial(live, k));
      for (const auto& d : card_subsets(g.deck().size(), mask_of(s.board), k)) {
        const PublicState c = deal(s, g, d);
        const CardMask dm = mask_of(d);
        std::vector<double> rc = ro;
        for (int h = 0; h < n; ++h)
          if (g.hands().mask(h) & dm) rc[h] = 0;
        if (std::all_of(rc.begin(), rc.end(), [](double x) { return x == 0; })) continue;
        const auto cv = walk(c, p, rc);
        for (int h = 0; h < n; ++h)
          if (!(g.hands().mask(h) & dm)) v[h] += w * cv[h];
      }
      return v;
    }
    const std::vector<Action> acts = legal_actions(s, g);
    if (s.actor != p) {
      std::vector<double> probs;
      const bool pub = policy_.is_public();
      if (pub)
        policy_.public_probs(s, acts, probs);
      else
        policy_.action_probs(s, acts, probs);
      const std::size_t na = acts.size();
      for (std::size_t a = 0; a < na; ++a) {
        if (pub && probs[a] == 0) continue;
        std::vector<double> rc(n);
        bool any = false;
        for (int h = 0; h < n; ++h) {
          rc[h] = ro[h] * (pub ? probs[a] : probs[h * na + a]);
          any |= rc[h] > 0;
        }
        if (!any) continue;
        const auto cv = walk(apply_action(s, g, acts[a]), p, rc);
        for (int h = 0; h < n; ++h) v[h] += cv[h];
      }
      return v;
    }
    // Best responder: cheap branches first, the call (which may lead to
    // chance nodes) last.
    std::vector<std::size_t> order;
    for (std::size_t a = 0; a < acts.size(); ++a)
      if (acts[a].kind == ActionKind::kFold) order.push_back(a);
    for (std::size_t a = acts.size(); a-- > 0;)
      if (acts[a].kind == ActionKind::kRaise) order.push_back(a);
    for (std::size_t a = 0; a < acts.size(); ++a)
      if (acts[a].kind == ActionKind::kCall) order.push_back(a);
    std::vector<double> mass;
    if (policy_.is_public()) mass = compatible_mass(s, ro);
    std::fill(v.begin(), v.end(), -std::numeric_limits<double>::infinity());
    const std::vector<double> valid = g.hands().board_mask(mask_of(s.board));
    for (std::size_t a : order) {
      const PublicState c = apply_action(s, g, acts[a]);
      if (policy_.is_public()) {
        const double ub = max_opponent_commitment(c, p);
        bool dominated = true;
        for (int h = 0; h < n && dominated; ++h)
          if (valid[h] > 0 && v[h] < ub * mass[h] * (1 - 1e-12) - 1e-12) dominated = false;
        if (dominated) continue;
      }
      const auto cv = walk(c, p, ro);
      for (int h = 0; h < n; ++h) v[h] = std::max(v[h], cv[h]);
    }
    for (int h = 0; h < n; ++h)
      if (valid[h] == 0) v[h] = 0;
    return v;
  }

  // Opponent mass compatible with each of p's hands.
  std::vector<double> compatible_mass(const PublicState& s, const std::vector<double>& ro) const {
    const HandSpace& hs = game_->hands();
    const CardMask bm = mask_of(s.board);
    std::vector<double> m(hs.size(), 0.0);
    for (int h = 0; h < hs.size(); ++h) {
      if (hs.mask(h) & bm) continue;
      for (int o = 0; o < hs.size(); ++o)
        if (!(hs.mask(o) & bm) && hs.compatible(h, o)) m[h] += ro[o];
    }
    return m;
  }

  // Largest total the opponent of p can have committed at any terminal
  // reachable from s, following only opponent actions with positive
  // probability. Requires a public policy; cards are irrelevant, so chance
  // nodes follow a single representative deal.
  double max_opponent_commitment(const PublicState& s, int p) {
    tick();
    const GameSpec& g = *game_;
    const int o = 1 - p;
    if (s.is_terminal()) return s.total[o];
    if (s.is_chance()) {
      const int k = cards_to_deal(s, g);
      const auto d = card_subsets(g.deck().size(), mask_of(s.board) | first_hands_mask(), k);
      return max_opponent_commitment(deal(s, g, d.front()), p);
    }
    const std::vector<Action> acts = legal_actions(s, g);
    double best = 0;
    if (s.actor == p) {
      // Raising to all-in dominates smaller raises for the bound only if the
      // opponent calls; walk every action to stay exact.
      for (const Action& a : acts) best = std::max(best, max_opponent_commitment(apply_action(s, g, a), p));
      return best;
    }
    std::vector<double> probs;
    policy_.public_probs(s, acts, probs);
    for (std::size_t a = 0; a < acts.size(); ++a)
      if (probs[a] > 0) best = std::max(best, max_opponent_commitment(apply_action(s, g, acts[a]), p));
    return best;
  }

  CardMask first_hands_mask() const {
    const HandSpace& hs = game_->hands();
    return hs.mask(0) | hs.mask(hs.size() - 1);
  }

  GamePtr game_;
  const Policy& policy_;
  OutcomeCache outcomes_;
  std::size_t max_nodes_;
  std::size_t visited_ = 0;
};

inline BestResponseReport best_response(GamePtr game, const Policy& policy, std::size_t max_nodes = 20'000'000) {
  return BestResponse(std::move(game), policy, max_nodes).run();
}

}  // namespace dstack
