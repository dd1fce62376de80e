#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/core/error.hpp"
#include "dstack/core/state.hpp"

namespace dstack {

// One entry of a sparse action menu.
struct BetOption {
  enum Kind { kFold, kCall, kPot, kMin, kAllIn };
  Kind kind = kCall;
  double fraction = 1.0;  // kPot only

  friend bool operator==(const BetOption&, const BetOption&) = default;

  std::string str() const {
    switch (kind) {
      case kFold: return "F";
      case kCall: return "C";
      case kMin: return "Min";
      case kAllIn: return "A";
      case kPot: {
        if (fraction == 1.0) return "P";
        std::ostringstream os;
        os << fraction << "P";
        return os.str();
      }
    }
    return "?";
  }

  static BetOption parse(const std::string& s) {
    if (s == "F") return {kFold, 0};
    if (s == "C") return {kCall, 0};
    if (s == "A") return {kAllIn, 0};
    if (s == "Min") return {kMin, 0};
    if (!s.empty() && s.back() == 'P') {
      if (s.size() == 1) return {kPot, 1.0};
      try {
        std::size_t used = 0;
        const double f = std::stod(s.substr(0, s.size() - 1), &used);
        if (used == s.size() - 1 && f > 0) return {kPot, f};
      } catch (const std::exception&) {
      }
    }
    throw Error("bad menu action '" + s + "'");
  }
};

using OptionSet = std::vector<BetOption>;

inline OptionSet parse_option_set(const std::string& s) {
  OptionSet out;
  std::string item;
  std::istringstream in(s);
  bool has_call = false;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) continue;
    out.push_back(BetOption::parse(item.substr(b, e - b + 1)));
    has_call |= out.back().kind == BetOption::kCall;
  }
  if (!has_call) throw Error("menu layer '" + s + "' must contain C");
  return out;
}

inline std::string option_set_string(const OptionSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + s[i].str();
  return out;
}

// Restricted action menus by depth below the lookahead root: the root's
// options, the response, and everything deeper. A full-width menu keeps
// every legal action.
struct ActionMenu {
  bool full = false;
  OptionSet first;
  OptionSet second;
  OptionSet remaining;

  static ActionMenu full_width() {
    ActionMenu m;
    m.full = true;
    return m;
  }

  static ActionMenu uniform(const std::string& options) {
    ActionMenu m;
    m.first = m.second = m.remaining = parse_option_set(options);
    return m;
  }

  static ActionMenu layered(const std::string& first, const std::string& second, const std::string& remaining) {
    ActionMenu m;
    m.first = parse_option_set(first);
    m.second = parse_option_set(second);
    m.remaining = parse_option_set(remaining);
    return m;
  }

  const OptionSet& layer(int depth) const { return depth == 0 ? first : (depth == 1 ? second : remaining); }

  // "full" or "first=F,C,P,A;second=...;remaining=..."
  std::string str() const {
    if (full) return "full";
    return "first=" + option_set_string(first) + ";second=" + option_set_string(second) +
           ";remaining=" + option_set_string(remaining);
  }

  static ActionMenu parse(const std::string& s) {
    if (s == "full") return full_width();
    if (s.find('=') == std::string::npos) return uniform(s);
    ActionMenu m;
    std::istringstream in(s);
    std::string part;
    bool f = false, sc = false, r = false;
    while (std::getline(in, part, ';')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) throw Error("bad menu '" + s + "'");
      std::string key = part.substr(0, eq);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      const OptionSet set = parse_option_set(part.substr(eq + 1));
      if (key == "first") { m.first = set; f = true; }
      else if (key == "second") { m.second = set; sc = true; }
      else if (key == "remaining") { m.remaining = set; r = true; }
      else throw Error("bad menu layer '" + key + "'");
    }
    if (!f || !sc || !r) throw Error("menu needs first, second and remaining layers");
    return m;
  }

  friend bool operator==(const ActionMenu&, const ActionMenu&) = default;
};

// Raise-to amount for a bet of `fraction` times the pot after the caller
// matches, rounded to whole chips.
inline Chips pot_fraction_raise_to(const PublicState& s, double fraction) {
  const int p = s.actor;
  const Chips call = s.to_call();
  return s.total[p] + call + std::round(fraction * (s.pot() + call));
}

// Concrete legal actions selected by a menu layer: fold only when facing a
// wager, bets clamped into the legal raise range, duplicates merged. Output
// order: fold, call, raises ascending.
inline std::vector<Action> menu_actions(const PublicState& s, const GameSpec& g, const ActionMenu& menu, int depth) {
  if (menu.full) return legal_actions(s, g);
  const OptionSet& set = menu.layer(depth);
  if (set.empty()) throw Error("empty menu layer");
  bool fold = false;
  std::vector<Chips> raises;
  const auto bounds = raise_bounds(s, g);
  for (const BetOption& o : set) {
    switch (o.kind) {
      case BetOption::kFold:
        fold = s.to_call() > 0;
        break;
      case BetOption::kCall:
        break;
      case BetOption::kMin:
        if (bounds) raises.push_back(bounds->first);
        break;
      case BetOption::kAllIn:
        if (bounds) raises.push_back(bounds->second);
        break;
      case BetOption::kPot:
        if (bounds) raises.push_back(std::clamp(pot_fraction_raise_to(s, o.fraction), bounds->first, bounds->second));
        break;
    }
  }
  std::sort(raises.begin(), raises.end());
  raises.erase(std::unique(raises.begin(), raises.end()), raises.end());
  std::vector<Action> out;
  if (fold) out.push_back(Action::fold());
  out.push_back(Action::call());
  for (Chips r : raises) out.push_back(Action::raise_to(r));
  return out;
}

}  // namespace dstack
