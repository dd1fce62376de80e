#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/core/hand_history.hpp"
#include "dstack/eval/agents.hpp"

namespace dstack {

// Cards for one hand: private cards per seat and the public cards of every
// later round (sorted within a round).
struct Deal {
  std::array<std::vector<Card>, 2> hole;
  std::vector<Card> board;
};

inline Deal deal_hand(const GameSpec& g, Rng& rng) {
  std::vector<Card> deck(static_cast<std::size_t>(g.deck().size()));
  std::iota(deck.begin(), deck.end(), 0);
  shuffle(rng, deck);
  const auto k = static_cast<std::size_t>(g.hands().cards_per_hand());
  Deal d;
  std::size_t pos = 0;
  for (auto& h : d.hole) {
    h.assign(deck.begin() + static_cast<std::ptrdiff_t>(pos), deck.begin() + static_cast<std::ptrdiff_t>(pos + k));
    std::sort(h.begin(), h.end());
    pos += k;
  }
  for (int r = 1; r < g.num_rounds(); ++r) {
    const auto n = static_cast<std::size_t>(g.round(r).board_cards);
    const auto first = d.board.size();
    d.board.insert(d.board.end(), deck.begin() + static_cast<std::ptrdiff_t>(pos),
                   deck.begin() + static_cast<std::ptrdiff_t>(pos + n));
    std::sort(d.board.begin() + static_cast<std::ptrdiff_t>(first), d.board.end());
    pos += n;
  }
  return d;
}

struct PlayOptions {
  double time_limit_ms = 0;  // per decision; 0 disables the check
};

// Plays one hand between the agents in `seats`. An exception, an illegal
// action or a timeout forfeits the hand: the offender loses what it has put
// in the pot and the record is flagged.
inline HandRecord play_hand(const GameSpec& g, std::array<Agent*, 2> seats, const Deal& d, std::uint64_t index,
                            std::uint64_t seed, const PlayOptions& opt = {}) {
  HandRecord rec;
  rec.index = index;
  rec.hole = d.hole;
  for (int p = 0; p < 2; ++p) {
    rec.names[p] = seats[p]->name();
    seats[p]->begin_hand(p, d.hole[p], derive_seed(seed, index, p));
  }
  PublicState s = initial_state(g);
  std::size_t pos = 0;
  int offender = -1;
  while (!s.is_terminal()) {
    if (s.is_chance()) {
      const auto k = static_cast<std::size_t>(cards_to_deal(s, g));
      const std::vector<Card> cards(d.board.begin() + static_cast<std::ptrdiff_t>(pos),
                                    d.board.begin() + static_cast<std::ptrdiff_t>(pos + k));
      pos += k;
      s = deal(s, g, cards);
      continue;
    }
    const int p = s.actor;
    const auto t0 = std::chrono::steady_clock::now();
    Action a;
    bool ok = true;
    try {
      a = seats[p]->act(s);
    } catch (const std::exception&) {
      ok = false;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!ok || !is_legal(s, g, a) || (opt.time_limit_ms > 0 && ms > opt.time_limit_ms)) {
      offender = p;
      break;
    }
    s = apply_action(s, g, a);
  }
  rec.betting = s.betting_string();
  rec.board = s.board;
  if (offender >= 0) {
    rec.flagged = true;
    rec.net[offender] = -s.total[offender];
    rec.net[1 - offender] = s.total[offender];
  } else {
    rec.net = terminal_net(g, s, rec.hole);
  }
  return rec;
}

struct MatchConfig {
  long hands = 1000;
  std::uint64_t seed = 1;
  // Blocks of four hands on one deal: each agent in each seat, with the
  // original and the swapped private cards. Hands round up to a multiple
  // of four.
  bool duplicate = true;
  PlayOptions play;
  std::ostream* log = nullptr;  // hand history, one line per hand
};

// Result from the first agent's point of view, in milli-big-blinds per hand.
struct MatchReport {
  long hands = 0;
  long flagged = 0;
  double mean = 0;
  double stderr_ = 0;  // over blocks when duplicate, else over hands
  double ci_lo = 0, ci_hi = 0;
  std::string agent, opponent;

  std::string str() const {
    std::ostringstream os;
    os << agent << " vs " << opponent << ": " << mean << " mbb/g +- " << 1.96 * stderr_ << " (95% CI [" << ci_lo
       << ", " << ci_hi << "], " << hands << " hands";
    if (flagged) os << ", " << flagged << " flagged";
    os << ")";
    return os.str();
  }

  // key=value lines for scripts.
  std::string kv() const {
    std::ostringstream os;
    os.precision(17);
    os << "agent=" << agent << "\nopponent=" << opponent << "\nhands=" << hands << "\nflagged=" << flagged
       << "\nmean_mbb=" << mean << "\nstderr_mbb=" << stderr_ << "\nci_lo=" << ci_lo << "\nci_hi=" << ci_hi << "\n";
    return os.str();
  }
};

// Mean, standard error and normal 95% interval of per-unit results.
inline void summarize(const std::vector<double>& x, MatchReport& r) {
  const double n = static_cast<double>(x.size());
  r.mean = n > 0 ? std::accumulate(x.begin(), x.end(), 0.0) / n : 0;
  double ss = 0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.stderr_ = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0;
  r.ci_lo = r.mean - 1.96 * r.stderr_;
  r.ci_hi = r.mean + 1.96 * r.stderr_;
}

// Plays `a` against `b`. Seats alternate; with duplicate blocks every deal is
// played four times.
inline MatchReport run_match(GamePtr game, Agent& a, Agent& b, const MatchConfig& cfg) {
  const GameSpec& g = *game;
  if (cfg.hands < 1) throw Error("match needs at least one hand");
  MatchReport rep;
  rep.agent = a.name();
  rep.opponent = b.name();
  const double unit = 1000.0 / static_cast<double>(g.unit());
  if (cfg.log) *cfg.log << kHandHistoryHeader << '\n';
  std::vector<double> units;
  std::uint64_t index = 0;
  auto play = [&](int seat_a, const Deal& d) {
    std::array<Agent*, 2> seats{};
    seats[seat_a] = &a;
    seats[1 - seat_a] = &b;
    const HandRecord r = play_hand(g, seats, d, index, cfg.seed, cfg.play);
    ++index;
    if (cfg.log) *cfg.log << format_hand(g, r) << '\n';
    rep.flagged += r.flagged;
    return static_cast<double>(r.net[seat_a]) * unit;
  };
  if (cfg.duplicate) {
    const long blocks = (cfg.hands + 3) / 4;
    for (long k = 0; k < blocks; ++k) {
      Rng rng(derive_seed(cfg.seed, 0xdea1, static_cast<std::uint64_t>(k)));
      const Deal d = deal_hand(g, rng);
      Deal swapped = d;
      std::swap(swapped.hole[0], swapped.hole[1]);
      double sum = play(0, d) + play(1, d) + play(0, swapped) + play(1, swapped);
      units.push_back(sum / 4);
    }
    rep.hands = blocks * 4;
  } else {
    for (long k = 0; k < cfg.hands; ++k) {
      Rng rng(derive_seed(cfg.seed, 0xdea1, static_cast<std::uint64_t>(k)));
      units.push_back(play(static_cast<int>(k % 2), deal_hand(g, rng)));
    }
    rep.hands = cfg.hands;
  }
  summarize(units, rep);
  return rep;
}

}  // namespace dstack
