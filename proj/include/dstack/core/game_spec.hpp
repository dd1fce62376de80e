#pragma once

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dstack/core/cards.hpp"
#include "dstack/core/error.hpp"
#include "dstack/core/hand_rank.hpp"

namespace dstack {

// Chips are real-valued so split pots and sampled training pots need no
// rounding; all wagers produced by the rules engine are whole chips.
using Chips = double;

enum class BettingType { kLimit, kNoLimit };

struct RoundSpec {
  int board_cards = 0;   // public cards dealt at the start of the round
  int first_actor = 0;   // seat that acts first in the round
  Chips raise_size = 0;  // limit games only
  int max_raises = 0;    // limit games only
};

struct PotInterval {
  Chips lo = 0;  // inclusive
  Chips hi = 0;  // inclusive
};

struct GameParams {
  std::string name = "custom";
  std::string ranks;
  std::string suits;
  int private_cards = 1;
  std::vector<RoundSpec> rounds;
  Chips ante = 0;
  Chips small_blind = 0;
  Chips big_blind = 0;
  Chips stack = 0;
  BettingType betting = BettingType::kLimit;
  ShowdownRule showdown = ShowdownRule::kHighCard;
  std::vector<PotInterval> pot_intervals;  // empty: derived from the stack
};

// Immutable description of a two-player poker-like game. Seat 0 posts the
// small blind; seat 1 posts the big blind.
class GameSpec {
 public:
  explicit GameSpec(GameParams p) : p_(std::move(p)), deck_(p_.ranks, p_.suits) {
    if (p_.rounds.empty()) throw Error("game needs at least one round");
    if (p_.rounds[0].board_cards != 0) throw Error("the first round cannot deal public cards");
    if (!(p_.stack >= p_.big_blind && p_.big_blind >= 2 * p_.small_blind))
      throw Error("require stack >= big blind >= 2 * small blind");
    if (p_.ante < 0 || p_.small_blind < 0) throw Error("negative forced bet");
    if (p_.stack < p_.ante + p_.big_blind || p_.stack <= 0) throw Error("stack too small for forced bets");
    int board = 0;
    for (const RoundSpec& r : p_.rounds) {
      if (r.first_actor < 0 || r.first_actor > 1) throw Error("first actor must be 0 or 1");
      if (r.board_cards < 0) throw Error("negative board cards");
      if (p_.betting == BettingType::kLimit && (r.raise_size <= 0 || r.max_raises < 0))
        throw Error("limit rounds need a positive raise size");
      board += r.board_cards;
    }
    if (board + 2 * p_.private_cards > deck_.size()) throw Error("deck too small for the deal");
    hands_ = HandSpace(deck_.size(), p_.private_cards);
    if (p_.pot_intervals.empty()) p_.pot_intervals = scaled_default_intervals();
  }

  const std::string& name() const { return p_.name; }
  const GameParams& params() const { return p_; }
  const Deck& deck() const { return deck_; }
  const HandSpace& hands() const { return hands_; }
  int num_hands() const { return hands_.size(); }
  int num_rounds() const { return static_cast<int>(p_.rounds.size()); }
  const RoundSpec& round(int r) const { return p_.rounds.at(r); }
  Chips ante() const { return p_.ante; }
  Chips small_blind() const { return p_.small_blind; }
  Chips big_blind() const { return p_.big_blind; }
  Chips blind(int seat) const { return seat == 0 ? p_.small_blind : p_.big_blind; }
  Chips stack() const { return p_.stack; }
  BettingType betting() const { return p_.betting; }
  ShowdownRule showdown() const { return p_.showdown; }
  const std::vector<PotInterval>& pot_intervals() const { return p_.pot_intervals; }

  // Chip value of one big blind for mbb/g accounting; ante-only games use
  // the ante.
  Chips unit() const {
    if (p_.big_blind > 0) return p_.big_blind;
    if (p_.ante > 0) return p_.ante;
    return 1;
  }

  // Smallest legal no-limit bet or raise increment.
  Chips min_bet() const { return p_.big_blind > 0 ? p_.big_blind : std::max<Chips>(1, p_.ante); }

  int board_cards_before_round(int r) const {
    int n = 0;
    for (int i = 0; i <= r && i < num_rounds(); ++i) n += p_.rounds[i].board_cards;
    return n;
  }

  // Largest total pot the rules allow.
  Chips max_pot() const {
    if (p_.betting == BettingType::kNoLimit) return 2 * p_.stack;
    Chips per_player = p_.ante + p_.big_blind;
    for (const RoundSpec& r : p_.rounds) per_player += r.raise_size * r.max_raises;
    return 2 * std::min(per_player, p_.stack);
  }

  // Ratio turning r1^T U r2 with uniform 1/N ranges into the expected value
  // of the deal: hands on a board of b cards over hands that remain for the
  // opponent once one hand is fixed.
  double deal_normalizer(int board_count) const {
    const int k = p_.private_cards;
    const double n = static_cast<double>(binomial(deck_.size() - board_count, k));
    const double n_opp = static_cast<double>(binomial(deck_.size() - board_count - k, k));
    return n / n_opp;
  }

  std::uint32_t rank(std::span<const Card> hand, std::span<const Card> board) const {
    return showdown_rank(p_.showdown, deck_, hand, board);
  }

 private:
  std::vector<PotInterval> scaled_default_intervals() const {
    // Reference intervals for 100/20,000 chip games, scaled by stack.
    const PotInterval ref[] = {{100, 100}, {200, 399}, {400, 1999}, {2000, 5999}, {6000, 19950}};
    const double f = p_.stack / 20000.0;
    std::vector<PotInterval> out;
    for (const PotInterval& r : ref) {
      const Chips lo = std::max<Chips>(std::round(r.lo * f), 2 * (p_.ante + p_.small_blind));
      const Chips hi = std::max<Chips>(std::round(r.hi * f), lo);
      out.push_back({lo, hi});
    }
    return out;
  }

  GameParams p_;
  Deck deck_;
  HandSpace hands_;
};

using GamePtr = std::shared_ptr<const GameSpec>;

inline GamePtr make_kuhn() {
  GameParams p;
  p.name = "kuhn";
  p.ranks = "JQK";
  p.suits = "s";
  p.private_cards = 1;
  p.rounds = {{0, 0, 1, 1}};
  p.ante = 1;
  p.stack = 2;
  p.betting = BettingType::kLimit;
  p.showdown = ShowdownRule::kHighCard;
  p.pot_intervals = {{2, 2}};
  return std::make_shared<const GameSpec>(p);
}

inline GamePtr make_leduc() {
  GameParams p;
  p.name = "leduc";
  p.ranks = "JQK";
  p.suits = "hs";
  p.private_cards = 1;
  p.rounds = {{0, 0, 2, 2}, {1, 0, 4, 2}};
  p.ante = 1;
  p.stack = 100;
  p.betting = BettingType::kLimit;
  p.showdown = ShowdownRule::kPairBoard;
  // Pots that can start the second round: check-check, bet-call, bet-raise-call.
  p.pot_intervals = {{2, 2}, {6, 6}, {10, 10}};
  return std::make_shared<const GameSpec>(p);
}

// Leduc cards with no-limit betting: ante 1, 20-chip stacks.
inline GamePtr make_leduc_nolimit() {
  GameParams p;
  p.name = "leduc-nl";
  p.ranks = "JQK";
  p.suits = "hs";
  p.private_cards = 1;
  p.rounds = {{0, 0, 0, 0}, {1, 0, 0, 0}};
  p.ante = 1;
  p.stack = 20;
  p.betting = BettingType::kNoLimit;
  p.showdown = ShowdownRule::kPairBoard;
  return std::make_shared<const GameSpec>(p);
}

inline GamePtr make_hunl() {
  GameParams p;
  p.name = "hunl";
  p.ranks = "23456789TJQKA";
  p.suits = "cdhs";
  p.private_cards = 2;
  p.rounds = {{0, 0, 0, 0}, {3, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}};
  p.small_blind = 50;
  p.big_blind = 100;
  p.stack = 20000;
  p.betting = BettingType::kNoLimit;
  p.showdown = ShowdownRule::kHoldem;
  p.pot_intervals = {{100, 100}, {200, 399}, {400, 1999}, {2000, 5999}, {6000, 19950}};
  return std::make_shared<const GameSpec>(p);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Parses the game config text format (see docs/formats.md). Lines are
// `key = value`; `#` starts a comment; `round` may repeat, one per round.
inline GamePtr parse_game_config(const std::string& text) {
  GameParams p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_ranks = false, saw_suits = false, saw_stack = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') continue;  // section headers are ignored here
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    std::istringstream vs(value);
    auto need = [&](bool ok) {
      if (!ok) throw ConfigError(lineno, "bad value for '" + key + "'");
    };
    if (key == "name") {
      p.name = value;
    } else if (key == "ranks") {
      p.ranks = value;
      saw_ranks = true;
    } else if (key == "suits") {
      p.suits = value;
      saw_suits = true;
    } else if (key == "private_cards") {
      need(static_cast<bool>(vs >> p.private_cards));
    } else if (key == "ante") {
      need(static_cast<bool>(vs >> p.ante));
    } else if (key == "blinds") {
      need(static_cast<bool>(vs >> p.small_blind >> p.big_blind));
    } else if (key == "stack") {
      need(static_cast<bool>(vs >> p.stack));
      saw_stack = true;
    } else if (key == "betting") {
      if (value == "limit") p.betting = BettingType::kLimit;
      else if (value == "nolimit") p.betting = BettingType::kNoLimit;
      else need(false);
    } else if (key == "showdown") {
      if (value == "highcard") p.showdown = ShowdownRule::kHighCard;
      else if (value == "pairboard") p.showdown = ShowdownRule::kPairBoard;
      else if (value == "holdem") p.showdown = ShowdownRule::kHoldem;
      else need(false);
    } else if (key == "round") {
      RoundSpec r;
      need(static_cast<bool>(vs >> r.board_cards >> r.first_actor));
      if (!(vs >> r.raise_size)) r.raise_size = 0;
      if (!(vs >> r.max_raises)) r.max_raises = 0;
      p.rounds.push_back(r);
    } else if (key == "pot_intervals") {
      // "lo-hi, lo-hi, ..."
      std::string item;
      std::istringstream items(value);
      while (std::getline(items, item, ',')) {
        item = detail::trim(item);
        const auto dash = item.find('-');
        need(dash != std::string::npos);
        PotInterval iv;
        try {
          iv.lo = std::stod(item.substr(0, dash));
          iv.hi = std::stod(item.substr(dash + 1));
        } catch (const std::exception&) {
          need(false);
        }
        need(iv.hi >= iv.lo);
        p.pot_intervals.push_back(iv);
      }
    } else {
      throw ConfigError(lineno, "unknown key '" + key + "'");
    }
  }
  if (!saw_ranks || !saw_suits) throw ConfigError(0, "game config needs 'ranks' and 'suits'");
  if (!saw_stack) throw ConfigError(0, "game config needs 'stack'");
  try {
    return std::make_shared<const GameSpec>(std::move(p));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(0, e.what());
  }
}

inline GamePtr load_game_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "cannot open game config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_game_config(ss.str());
}

// Resolves a built-in game id or a path to a config file.
inline GamePtr make_game(const std::string& id) {
  if (id == "kuhn") return make_kuhn();
  if (id == "leduc") return make_leduc();
  if (id == "leduc-nl") return make_leduc_nolimit();
  if (id == "hunl") return make_hunl();
  return load_game_config(id);
}

}  // namespace dstack
