#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/core/error.hpp"
#include "dstack/core/game_spec.hpp"
#include "dstack/core/state.hpp"

namespace dstack {

// Behavioral strategy for whichever player acts at a public state.
class Policy {
 public:
  virtual ~Policy() = default;

  // Fills `out` (hands x actions, row-major) with the actor's action
  // probabilities for every private hand. Rows of hands blocked by the board
  // are unspecified.
  virtual void action_probs(const PublicState& s, const std::vector<Action>& actions,
                            std::vector<double>& out) const = 0;

  // True when probabilities depend on the betting sequence only.
  virtual bool is_public() const { return false; }

  // One row of action probabilities for a public policy.
  virtual void public_probs(const PublicState& s, const std::vector<Action>& actions,
                            std::vector<double>& out) const {
    std::vector<double> all;
    action_probs(s, actions, all);
    out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(actions.size()));
  }
};

// Tabular strategy keyed by public state. A row stores probabilities over the
// actions recorded for that state; queried actions absent from the record get
// zero mass, and states never recorded play uniformly.
class StrategyProfile : public Policy {
 public:
  struct Entry {
    std::vector<Action> actions;
    std::vector<double> probs;  // hands x actions
  };

  StrategyProfile() = default;
  explicit StrategyProfile(GamePtr game) : game_(std::move(game)) {}

  const GamePtr& game() const { return game_; }
  std::size_t size() const { return table_.size(); }
  const std::map<std::string, Entry>& entries() const { return table_; }

  void set(const std::string& key, std::vector<Action> actions, std::vector<double> probs) {
    if (probs.size() != actions.size() * static_cast<std::size_t>(game_->num_hands()))
      throw Error("strategy row has the wrong shape");
    table_[key] = Entry{std::move(actions), std::move(probs)};
  }

  void set(const PublicState& s, std::vector<Action> actions, std::vector<double> probs) {
    set(s.key(game_->deck()), std::move(actions), std::move(probs));
  }

  // Overwrites only the rows of the given hands.
  void set_hand(const PublicState& s, const std::vector<Action>& actions, int hand, std::span<const double> p) {
    const std::string key = s.key(game_->deck());
    auto it = table_.find(key);
    const int n = game_->num_hands();
    const std::size_t na = actions.size();
    if (it == table_.end()) {
      std::vector<double> probs(na * n, 1.0 / static_cast<double>(na));
      it = table_.emplace(key, Entry{actions, std::move(probs)}).first;
    }
    if (it->second.actions != actions) throw Error("action set mismatch at " + key);
    std::copy(p.begin(), p.end(), it->second.probs.begin() + static_cast<std::ptrdiff_t>(hand * na));
  }

  const Entry* find(const std::string& key) const {
    auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

  void action_probs(const PublicState& s, const std::vector<Action>& actions,
                    std::vector<double>& out) const override {
    const int n = game_->num_hands();
    const std::size_t na = actions.size();
    out.assign(na * n, 0.0);
    const Entry* e = find(s.key(game_->deck()));
    if (!e) {
      std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(na));
      return;
    }
    std::vector<int> map(e->actions.size(), -1);
    for (std::size_t i = 0; i < e->actions.size(); ++i)
      for (std::size_t j = 0; j < na; ++j)
        if (e->actions[i] == actions[j]) map[i] = static_cast<int>(j);
    const std::size_t ne = e->actions.size();
    for (int h = 0; h < n; ++h)
      for (std::size_t i = 0; i < ne; ++i)
        if (map[i] >= 0) out[h * na + map[i]] = e->probs[h * ne + i];
  }

  // Text dump: one line per (public state, hand) with at least one
  // non-blocked hand; probabilities printed round-trip exact.
  //   <betting>|<board> <hand> <action>=<prob> ...
  std::string dump() const {
    std::ostringstream os;
    os << "# dstack-strategy v1 " << game_->name() << "\n";
    const HandSpace& hs = game_->hands();
    for (const auto& [key, e] : table_) {
      const auto bar = key.find('|');
      const CardMask board = mask_of(game_->deck().parse_cards(key.substr(bar + 1)));
      const std::size_t na = e.actions.size();
      for (int h = 0; h < hs.size(); ++h) {
        if (hs.mask(h) & board) continue;
        os << key << ' ' << game_->deck().cards_string(hs.cards(h));
        for (std::size_t a = 0; a < na; ++a) os << ' ' << e.actions[a].str() << '=' << format_prob(e.probs[h * na + a]);
        os << '\n';
      }
    }
    return os.str();
  }

  static StrategyProfile parse_dump(GamePtr game, const std::string& text) {
    StrategyProfile p(game);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string key, hand, item;
      ls >> key >> hand;
      const int h = game->hands().index(game->deck().parse_cards(hand));
      if (h < 0) throw ConfigError(lineno, "bad hand '" + hand + "'");
      std::vector<Action> acts;
      std::vector<double> probs;
      while (ls >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, "bad entry '" + item + "'");
        acts.push_back(Action::parse(item.substr(0, eq)));
        probs.push_back(std::stod(item.substr(eq + 1)));
      }
      auto it = p.table_.find(key);
      if (it == p.table_.end()) {
        std::vector<double> all(acts.size() * game->num_hands(), 1.0 / static_cast<double>(acts.size()));
        it = p.table_.emplace(key, Entry{acts, std::move(all)}).first;
      }
      if (it->second.actions != acts) throw ConfigError(lineno, "inconsistent actions for " + key);
      std::copy(probs.begin(), probs.end(), it->second.probs.begin() + static_cast<std::ptrdiff_t>(h * acts.size()));
    }
    return p;
  }

 private:
  static std::string format_prob(double x) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
  }

  GamePtr game_;
  std::map<std::string, Entry> table_;
};

}  // namespace dstack
