#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/core/cards.hpp"
#include "dstack/core/error.hpp"
#include "dstack/core/game_spec.hpp"

namespace dstack {

enum class ActionKind : std::uint8_t { kFold, kCall, kRaise };

// A betting action. For raises, `to` is the actor's total chips committed
// to the hand after the raise (ACPC "raise to" convention).
struct Action {
  ActionKind kind = ActionKind::kCall;
  Chips to = 0;

  static Action fold() { return {ActionKind::kFold, 0}; }
  static Action call() { return {ActionKind::kCall, 0}; }
  static Action raise_to(Chips to) { return {ActionKind::kRaise, to}; }

  friend bool operator==(const Action&, const Action&) = default;

  std::string str() const {
    switch (kind) {
      case ActionKind::kFold: return "f";
      case ActionKind::kCall: return "c";
      case ActionKind::kRaise: {
        const auto whole = static_cast<long long>(std::llround(to));
        if (static_cast<Chips>(whole) == to) return "r" + std::to_string(whole);
        std::ostringstream os;
        os.precision(17);
        os << "r" << to;
        return os.str();
      }
    }
    return "?";
  }

  static Action parse(const std::string& s) {
    if (s == "f") return fold();
    if (s == "c") return call();
    if (s.size() > 1 && s[0] == 'r') {
      try {
        std::size_t used = 0;
        const double v = std::stod(s.substr(1), &used);
        if (used == s.size() - 1) return raise_to(v);
      } catch (const std::exception&) {
      }
    }
    throw IllegalAction("cannot parse action '" + s + "'");
  }
};

inline constexpr int kChance = -1;
inline constexpr int kTerminal = -2;

// Node of the public tree: everything both players observe. Values are
// immutable in practice; apply_action and deal return new states.
struct PublicState {
  std::vector<Card> board;
  std::vector<std::vector<Action>> betting;  // one entry per started round
  std::array<Chips, 2> total{};              // chips committed to the hand
  std::array<Chips, 2> committed{};          // chips committed this round
  int round = 0;
  int actor = 0;  // 0, 1, kChance or kTerminal
  int raises_this_round = 0;
  Chips last_raise = 0;  // size of the last bet/raise increment this round
  int folder = -1;

  Chips pot() const { return total[0] + total[1]; }
  bool is_terminal() const { return actor == kTerminal; }
  bool is_chance() const { return actor == kChance; }
  bool is_decision() const { return actor == 0 || actor == 1; }
  Chips to_call() const {
    return is_decision() ? std::max<Chips>(0, committed[1 - actor] - committed[actor]) : 0;
  }
  int actions_this_round() const {
    return betting.empty() ? 0 : static_cast<int>(betting.back().size());
  }

  // ACPC-style betting string, rounds separated by '/'.
  std::string betting_string() const {
    std::string s;
    for (std::size_t r = 0; r < betting.size(); ++r) {
      if (r) s += '/';
      for (const Action& a : betting[r]) s += a.str();
    }
    return s;
  }

  // Unique key of the public state within one game.
  std::string key(const Deck& deck) const {
    return betting_string() + "|" + deck.cards_string(board);
  }

  friend bool operator==(const PublicState&, const PublicState&) = default;
};

inline PublicState initial_state(const GameSpec& g) {
  PublicState s;
  for (int p = 0; p < 2; ++p) {
    s.committed[p] = g.blind(p);
    s.total[p] = g.ante() + g.blind(p);
  }
  s.round = 0;
  s.betting.emplace_back();
  s.last_raise = g.big_blind() - g.small_blind();
  s.actor = g.round(0).first_actor;
  return s;
}

namespace detail {

inline bool all_in(const GameSpec& g, const PublicState& s, int p) { return s.total[p] >= g.stack(); }

inline bool betting_possible(const GameSpec& g, const PublicState& s) {
  return !all_in(g, s, 0) && !all_in(g, s, 1);
}

}  // namespace detail

// Inclusive range of legal raise-to amounts for the actor; nullopt when no
// raise is legal.
inline std::optional<std::pair<Chips, Chips>> raise_bounds(const PublicState& s, const GameSpec& g) {
  if (!s.is_decision()) return std::nullopt;
  const int p = s.actor, o = 1 - p;
  if (detail::all_in(g, s, o)) return std::nullopt;
  const Chips call_total = s.total[p] + s.to_call();
  if (call_total >= g.stack()) return std::nullopt;
  const Chips max_to = g.stack();
  if (g.betting() == BettingType::kLimit) {
    if (s.raises_this_round >= g.round(s.round).max_raises) return std::nullopt;
    const Chips to = std::min(call_total + g.round(s.round).raise_size, max_to);
    return std::make_pair(to, to);
  }
  const Chips increment = std::max(s.last_raise, g.min_bet());
  const Chips min_to = std::min(call_total + increment, max_to);
  return std::make_pair(min_to, max_to);
}

// Legal actions: fold when facing a wager, call/check always, then every
// legal raise-to amount in whole chips ascending (the last is all-in).
inline std::vector<Action> legal_actions(const PublicState& s, const GameSpec& g) {
  if (!s.is_decision()) throw InvalidState("legal_actions on a chance or terminal state");
  std::vector<Action> out;
  if (s.to_call() > 0) out.push_back(Action::fold());
  out.push_back(Action::call());
  if (auto b = raise_bounds(s, g)) {
    for (Chips to = b->first; to < b->second; to += 1) out.push_back(Action::raise_to(to));
    out.push_back(Action::raise_to(b->second));
  }
  return out;
}

inline bool is_legal(const PublicState& s, const GameSpec& g, const Action& a) {
  if (!s.is_decision()) return false;
  switch (a.kind) {
    case ActionKind::kFold: return s.to_call() > 0;
    case ActionKind::kCall: return true;
    case ActionKind::kRaise: {
      auto b = raise_bounds(s, g);
      if (!b) return false;
      if (a.to == b->second) return true;
      return a.to >= b->first && a.to < b->second && a.to == std::floor(a.to);
    }
  }
  return false;
}

namespace detail {

// Moves a state whose betting round just closed to the next chance node or
// showdown. Rounds without possible betting are recorded as empty.
inline void close_round(PublicState& s, const GameSpec& g) {
  if (s.round + 1 >= g.num_rounds()) {
    s.actor = kTerminal;
    return;
  }
  s.actor = kChance;
}

inline void start_round(PublicState& s, const GameSpec& g) {
  s.committed = {0, 0};
  s.raises_this_round = 0;
  s.last_raise = 0;
  s.betting.emplace_back();
  if (!betting_possible(g, s)) {
    close_round(s, g);
    return;
  }
  s.actor = g.round(s.round).first_actor;
}

}  // namespace detail

inline PublicState apply_action(const PublicState& s, const GameSpec& g, const Action& a) {
  if (!s.is_decision()) throw InvalidState("apply_action on a chance or terminal state");
  if (!is_legal(s, g, a)) throw IllegalAction("illegal action '" + a.str() + "' at '" + s.betting_string() + "'");
  PublicState n = s;
  const int p = s.actor, o = 1 - p;
  n.betting.back().push_back(a);
  switch (a.kind) {
    case ActionKind::kFold:
      n.folder = p;
      n.actor = kTerminal;
      return n;
    case ActionKind::kCall: {
      const Chips amount = std::min(s.to_call(), g.stack() - s.total[p]);
      n.committed[p] += amount;
      n.total[p] += amount;
      const bool closes = s.to_call() > 0 ? true : n.actions_this_round() >= 2;
      // A limp by the small blind leaves the big blind its option.
      if (closes && !(s.to_call() > 0 && n.actions_this_round() == 1 && s.round == 0 &&
                      g.big_blind() > 0 && n.committed[0] == n.committed[1] &&
                      !detail::all_in(g, n, p))) {
        detail::close_round(n, g);
      } else {
        n.actor = o;
      }
      return n;
    }
    case ActionKind::kRaise: {
      const Chips prev_max = std::max(s.committed[0], s.committed[1]);
      const Chips add = a.to - s.total[p];
      n.committed[p] += add;
      n.total[p] = a.to;
      n.last_raise = std::max<Chips>(n.committed[p] - prev_max, s.last_raise);
      ++n.raises_this_round;
      n.actor = o;
      return n;
    }
  }
  return n;
}

// Number of public cards dealt at the chance node `s`.
inline int cards_to_deal(const PublicState& s, const GameSpec& g) {
  return g.round(s.round + 1).board_cards;
}

// Applies a chance deal of public cards for the next round.
inline PublicState deal(const PublicState& s, const GameSpec& g, std::span<const Card> cards) {
  if (!s.is_chance()) throw InvalidState("deal on a non-chance state");
  const int next = s.round + 1;
  if (next >= g.num_rounds()) throw InvalidState("no round left to deal");
  if (static_cast<int>(cards.size()) != g.round(next).board_cards)
    throw IllegalAction("wrong number of public cards");
  const CardMask used = mask_of(s.board);
  for (Card c : cards)
    if (c < 0 || c >= g.deck().size() || (used & card_bit(c)))
      throw IllegalAction("card not in remaining deck");
  PublicState n = s;
  n.board.insert(n.board.end(), cards.begin(), cards.end());
  n.round = next;
  detail::start_round(n, g);
  return n;
}

// Replays a betting string (with boards given separately per round) from the
// initial state.
inline PublicState replay(const GameSpec& g, const std::string& betting,
                          const std::vector<Card>& board) {
  PublicState s = initial_state(g);
  std::size_t board_pos = 0;
  std::size_t i = 0;
  while (i <= betting.size()) {
    if (s.is_chance()) {
      const int k = g.round(s.round + 1).board_cards;
      if (board_pos + k > board.size()) break;
      s = deal(s, g, std::span<const Card>(board.data() + board_pos, k));
      board_pos += k;
      continue;
    }
    if (i == betting.size()) break;
    const char c = betting[i];
    if (c == '/') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (c == 'r')
      while (j < betting.size() && (std::isdigit(static_cast<unsigned char>(betting[j])) || betting[j] == '.' || betting[j] == 'e' || betting[j] == '-')) ++j;
    s = apply_action(s, g, Action::parse(betting.substr(i, j - i)));
    i = j;
  }
  return s;
}

}  // namespace dstack
