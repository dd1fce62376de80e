#pragma once

#include <array>
#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/state.hpp"

namespace dstack {

inline constexpr const char* kHandHistoryHeader = "# dstack-hand-history v1";

// One completed hand. Seat 0 is the small blind / first actor of round 0.
struct HandRecord {
  std::uint64_t index = 0;
  std::string betting;                    // ACPC-style betting string
  std::array<std::vector<Card>, 2> hole;  // private cards per seat
  std::vector<Card> board;                // all public cards dealt
  std::array<Chips, 2> net{};             // chips won per seat
  std::array<std::string, 2> names;       // player per seat
  bool flagged = false;                   // forfeit or fallback happened

  friend bool operator==(const HandRecord&, const HandRecord&) = default;
};

// Shortest decimal text that reads back to the same double.
inline std::string format_chips(double v) {
  if (v == 0) v = 0;  // drop negative zero
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_chips(const std::string& s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("bad chip value '" + s + "'");
  return v;
}

// Net chips for each seat at a terminal state given both private hands.
inline std::array<Chips, 2> terminal_net(const GameSpec& g, const PublicState& s,
                                         const std::array<std::vector<Card>, 2>& hole) {
  if (!s.is_terminal()) throw InvalidState("hand is not finished");
  if (s.folder >= 0) {
    const int w = 1 - s.folder;
    std::array<Chips, 2> net{};
    net[w] = s.total[s.folder];
    net[s.folder] = -s.total[s.folder];
    return net;
  }
  const auto r0 = g.rank(hole[0], s.board), r1 = g.rank(hole[1], s.board);
  if (r0 > r1) return {s.total[1], -s.total[1]};
  if (r1 > r0) return {-s.total[0], s.total[0]};
  const Chips d = (s.total[1] - s.total[0]) / 2;
  return {d, -d};
}

// STATE:<index>:<betting>:<hole0>|<hole1>[/<round board>...]:<net0>|<net1>:<name0>|<name1>[:flagged]
inline std::string format_hand(const GameSpec& g, const HandRecord& r) {
  const Deck& d = g.deck();
  std::ostringstream os;
  os << "STATE:" << r.index << ':' << r.betting << ':' << d.cards_string(r.hole[0]) << '|'
     << d.cards_string(r.hole[1]);
  std::size_t pos = 0;
  for (int round = 1; round < g.num_rounds() && pos < r.board.size(); ++round) {
    const auto k = static_cast<std::size_t>(g.round(round).board_cards);
    os << '/' << d.cards_string(std::span<const Card>(r.board.data() + pos, std::min(k, r.board.size() - pos)));
    pos += k;
  }
  os << ':' << format_chips(r.net[0]) << '|' << format_chips(r.net[1]) << ':' << r.names[0] << '|'
     << r.names[1];
  if (r.flagged) os << ":flagged";
  return os.str();
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline HandRecord parse_hand(const GameSpec& g, const std::string& line) {
  const auto f = detail::split(line, ':');
  if ((f.size() != 6 && f.size() != 7) || f[0] != "STATE") throw Error("bad hand line: " + line);
  HandRecord r;
  r.index = std::stoull(f[1]);
  r.betting = f[2];
  const auto rounds = detail::split(f[3], '/');
  const auto holes = detail::split(rounds[0], '|');
  if (holes.size() != 2) throw Error("bad hole cards: " + line);
  r.hole[0] = g.deck().parse_cards(holes[0]);
  r.hole[1] = g.deck().parse_cards(holes[1]);
  for (std::size_t i = 1; i < rounds.size(); ++i) {
    const auto cards = g.deck().parse_cards(rounds[i]);
    r.board.insert(r.board.end(), cards.begin(), cards.end());
  }
  const auto nets = detail::split(f[4], '|');
  const auto names = detail::split(f[5], '|');
  if (nets.size() != 2 || names.size() != 2) throw Error("bad hand line: " + line);
  r.net = {parse_chips(nets[0]), parse_chips(nets[1])};
  r.names = {names[0], names[1]};
  r.flagged = f.size() == 7 && f[6] == "flagged";
  return r;
}

// Replays a record through the rules engine and checks the stored nets.
inline PublicState replay_hand(const GameSpec& g, const HandRecord& r) {
  PublicState s = replay(g, r.betting, r.board);
  if (!r.flagged) {
    const auto net = terminal_net(g, s, r.hole);
    if (net != r.net) throw Error("hand " + std::to_string(r.index) + ": net chips do not match replay");
  }
  return s;
}

}  // namespace dstack
