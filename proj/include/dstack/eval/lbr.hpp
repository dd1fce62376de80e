#pragma once

#include <bit>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/core/terminal.hpp"
#include "dstack/eval/match.hpp"
#include "dstack/lookahead/action_menu.hpp"
#include "dstack/solver/best_response.hpp"

namespace dstack {

// Actions LBR considers, per round (the last set repeats for later rounds).
struct LbrConfig {
  std::vector<OptionSet> rounds{parse_option_set("F,C,P,A")};
  // Runouts enumerated exactly when there are at most this many; otherwise
  // `samples` uniform runouts estimate the win probability.
  std::size_t max_exact_runouts = 2000;
  int samples = 200;

  const OptionSet& options(int round) const {
    return rounds[static_cast<std::size_t>(std::min<int>(round, static_cast<int>(rounds.size()) - 1))];
  }

  // Named presets: "FC", "FCPA", "56bets", or per-round sets separated by
  // ';' such as "F,C,P,A;F,C".
  static LbrConfig parse(const std::string& s) {
    LbrConfig c;
    c.rounds.clear();
    if (s == "FC") {
      c.rounds.push_back(parse_option_set("F,C"));
    } else if (s == "FCPA") {
      c.rounds.push_back(parse_option_set("F,C,P,A"));
    } else if (s == "56bets") {
      OptionSet o = parse_option_set("F,C,A");
      for (int k = 1; k <= 56; ++k) o.push_back({BetOption::kPot, k / 56.0});
      c.rounds.push_back(o);
    } else {
      std::istringstream in(s);
      std::string part;
      while (std::getline(in, part, ';')) c.rounds.push_back(parse_option_set(part));
    }
    if (c.rounds.empty()) throw Error("LBR config needs at least one action set");
    return c;
  }
};

// Probability that `hole` beats a hand drawn from `range` at showdown after
// the remaining public cards, ties counting half. Weights of hands that
// conflict with `hole` or `board` are ignored.
inline double lbr_win_probability(const GameSpec& g, std::span<const Card> hole, std::span<const Card> board,
                                  std::span<const double> range, const LbrConfig& cfg, Rng& rng) {
  const int total_board = g.board_cards_before_round(g.num_rounds() - 1);
  const int need = total_board - static_cast<int>(board.size());
  const CardMask used = mask_of(hole) | mask_of(board);
  const int n = g.num_hands();
  std::vector<Card> full(board.begin(), board.end());
  full.resize(static_cast<std::size_t>(total_board));
  double win = 0, weight = 0;
  auto score = [&](std::span<const Card> runout) {
    std::copy(runout.begin(), runout.end(), full.begin() + static_cast<std::ptrdiff_t>(board.size()));
    const CardMask bm = used | mask_of(runout);
    const auto mine = g.rank(hole, full);
    for (int h = 0; h < n; ++h) {
      if (range[h] <= 0 || (g.hands().mask(h) & bm)) continue;
      const auto theirs = g.rank(g.hands().cards(h), full);
      win += range[h] * (mine > theirs ? 1.0 : mine == theirs ? 0.5 : 0.0);
      weight += range[h];
    }
  };
  const int live = g.deck().size() - std::popcount(used);
  if (need <= 0) {
    score({});
  } else if (binomial(live, need) <= cfg.max_exact_runouts) {
    for (const auto& r : card_subsets(g.deck().size(), used, need)) score(r);
  } else {
    std::vector<Card> rest;
    for (Card c = 0; c < g.deck().size(); ++c)
      if (!(card_bit(c) & used)) rest.push_back(c);
    for (int i = 0; i < cfg.samples; ++i) {
      // Partial Fisher-Yates: the first `need` entries are a uniform draw.
      for (int j = 0; j < need; ++j) {
        const auto k = static_cast<std::size_t>(uniform_int(rng, j, static_cast<std::int64_t>(rest.size()) - 1));
        std::swap(rest[static_cast<std::size_t>(j)], rest[k]);
      }
      score(std::span<const Card>(rest.data(), static_cast<std::size_t>(need)));
    }
  }
  return weight > 0 ? win / weight : 0.5;
}

// Local best response: tracks the opponent's range from its exposed action
// probabilities and plays the action with the highest value under the
// assumption that the hand is checked down from there.
class LbrAgent : public Agent {
 public:
  LbrAgent(GamePtr game, Agent& target, LbrConfig cfg)
      : Agent(std::move(game)), target_(target), cfg_(std::move(cfg)) {
    if (!target_.exposes_strategy()) throw UnsupportedAgent("LBR needs an agent that exposes its action probabilities");
  }

  std::string name() const override { return "lbr"; }
  bool exposes_strategy() const override { return false; }
  AgentStrategy strategy(const PublicState&) override { throw UnsupportedAgent("LBR has no strategy table"); }

  // Opponent range at `s` given our hole cards, normalized to 1.
  std::vector<double> opponent_range(const PublicState& s) {
    const GameSpec& g = *game_;
    const int n = g.num_hands();
    const CardMask dead = mask_of(hole_) | mask_of(s.board);
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int h = 0; h < n; ++h) r[h] = (g.hands().mask(h) & dead) ? 0.0 : 1.0;
    for (const HistoryEvent& e : public_history(g, s)) {
      if (e.is_deal || e.actor == seat_) continue;
      const auto p = target_.action_probability(e.before, e.action);
      for (int h = 0; h < n; ++h) r[h] *= p[h];
    }
    double m = 0;
    for (double x : r) m += x;
    if (m <= 0) {
      // The agent reported zero probability for what it did; fall back to
      // the card-consistent range.
      for (int h = 0; h < n; ++h) r[h] = (g.hands().mask(h) & dead) ? 0.0 : 1.0;
      for (double x : r) m += x;
    }
    for (double& x : r) x /= m;
    return r;
  }

  // Values of the candidate actions relative to folding now.
  std::vector<std::pair<Action, double>> action_values(const PublicState& s) {
    const GameSpec& g = *game_;
    ActionMenu menu;
    menu.first = menu.second = menu.remaining = cfg_.options(s.round);
    const auto acts = menu_actions(s, g, menu, 0);
    std::vector<std::pair<Action, double>> out;
    const int me = s.actor;
    const bool raises = acts.back().kind == ActionKind::kRaise;
    if (!raises && s.to_call() == 0) return {{Action::call(), 0.0}};  // checking dominates folding
    const auto range = opponent_range(s);
    const double wp = lbr_win_probability(g, hole_, s.board, range, cfg_, rng_);
    const Chips top = std::max(s.total[0], s.total[1]);
    for (const Action& a : acts) {
      switch (a.kind) {
        case ActionKind::kFold: out.emplace_back(a, 0.0); break;
        case ActionKind::kCall: out.emplace_back(a, wp * 2.0 * top - s.to_call()); break;
        case ActionKind::kRaise: {
          const PublicState next = apply_action(s, g, a);
          const auto fold = target_.action_probability(next, Action::fold());
          double fp = 0;
          std::vector<double> called(range.size());
          for (std::size_t h = 0; h < range.size(); ++h) {
            fp += range[h] * fold[h];
            called[h] = range[h] * (1 - fold[h]);
          }
          double ev = fp * s.pot();
          if (fp < 1) {
            const double wpc = lbr_win_probability(g, hole_, s.board, called, cfg_, rng_);
            ev += (1 - fp) * (wpc * 2.0 * a.to - (a.to - s.total[me]));
          }
          out.emplace_back(a, ev);
          break;
        }
      }
    }
    return out;
  }

  Action act(const PublicState& s) override {
    const auto vals = action_values(s);
    // Ties go to the call, then fold, then the smallest raise.
    std::size_t best = 0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (vals[i].first.kind == ActionKind::kCall) best = i;
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (vals[i].second > vals[best].second) best = i;
    return vals[best].first;
  }

 private:
  Agent& target_;
  LbrConfig cfg_;
};

// LBR's winnings against `agent` in duplicate blocks (mbb/g for LBR).
inline MatchReport lbr_play(GamePtr game, Agent& agent, const LbrConfig& cfg, long hands, std::uint64_t seed,
                            std::ostream* log = nullptr) {
  LbrAgent lbr(game, agent, cfg);
  MatchConfig mc;
  mc.hands = hands;
  mc.seed = seed;
  mc.duplicate = true;
  mc.log = log;
  return run_match(std::move(game), lbr, agent, mc);
}

// The agent's complete strategy, collected by querying it at every public
// state where it acts. Actions the agent never takes are not expanded.
inline StrategyProfile extract_agent_strategy(GamePtr game, Agent& agent, std::size_t max_states = 200000) {
  const GameSpec& g = *game;
  StrategyProfile prof(game);
  std::size_t visited = 0;
  for (int seat = 0; seat < 2; ++seat) {
    agent.begin_hand(seat, {}, derive_seed(0x5eed, static_cast<std::uint64_t>(seat)));
    std::function<void(const PublicState&)> walk = [&](const PublicState& s) {
      if (++visited > max_states) throw GameTooLarge("strategy extraction exceeds " + std::to_string(max_states) + " states");
      if (s.is_terminal()) return;
      if (s.is_chance()) {
        for (const auto& cards : card_subsets(g.deck().size(), mask_of(s.board), cards_to_deal(s, g)))
          walk(deal(s, g, cards));
        return;
      }
      if (s.actor != seat) {
        for (const Action& a : legal_actions(s, g)) walk(apply_action(s, g, a));
        return;
      }
      AgentStrategy st = agent.strategy(s);
      const std::size_t na = st.actions.size();
      const auto valid = g.hands().board_mask(mask_of(s.board));
      for (std::size_t i = 0; i < na; ++i) {
        bool used = false;
        for (int h = 0; h < g.num_hands() && !used; ++h) used = valid[h] > 0 && st.probs[h * na + i] > 0;
        if (used) walk(apply_action(s, g, st.actions[i]));
      }
      prof.set(s, std::move(st.actions), std::move(st.probs));
    };
    walk(initial_state(g));
  }
  return prof;
}

// Exact exploitability of an agent whose strategy can be extracted.
inline BestResponseReport exploitability_report(GamePtr game, Agent& agent, std::size_t max_states = 200000) {
  if (!agent.exposes_strategy()) throw UnsupportedAgent("exploitability needs an agent that exposes its strategy");
  const StrategyProfile prof = extract_agent_strategy(game, agent, max_states);
  return best_response(std::move(game), prof);
}

}  // namespace dstack
