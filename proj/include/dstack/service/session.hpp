#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dstack/core/hand_history.hpp"
#include "dstack/eval/agents.hpp"
#include "dstack/eval/match.hpp"

namespace dstack {

using Json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;

// A message for one player of a session.
struct Outbound {
  int player = -1;
  Json msg;
};

struct SessionConfig {
  std::uint64_t seed = 1;
  double agent_budget_ms = 0;  // 0: unlimited
  long max_hands = 0;          // 0: until resign
  std::ostream* history = nullptr;
};

// One table: two players (agents or remote humans) alternate seats hand by
// hand; player p sits in game seat (p + hand) % 2. The session is the only
// judge of legality and never sends a player the other's private cards
// before a showdown.
class TableSession {
 public:
  struct Player {
    AgentPtr agent;  // null for a human
    std::string name = "human";
  };

  TableSession(std::string id, GamePtr game, std::array<Player, 2> players, SessionConfig cfg = {})
      : id_(std::move(id)), game_(std::move(game)), players_(std::move(players)), cfg_(cfg) {
    for (int p = 0; p < 2; ++p) {
      if (players_[p].agent) {
        players_[p].name = players_[p].agent->name();
        joined_[p] = true;
      }
    }
    if (cfg_.history) *cfg_.history << kHandHistoryHeader << '\n';
  }

  const std::string& id() const { return id_; }
  const GameSpec& game() const { return *game_; }
  long hands_completed() const { return static_cast<long>(records_.size()); }
  const std::vector<HandRecord>& records() const { return records_; }
  const std::array<double, 2>& totals() const { return totals_; }
  bool finished() const { return finished_; }
  bool is_human(int player) const { return !players_[player].agent; }
  int seat_of(int player) const { return (player + static_cast<int>(hand_index_)) % 2; }
  int player_at(int seat) const { return (seat + static_cast<int>(hand_index_)) % 2; }
  const PublicState& state() const { return state_; }

  // Handles one client message from `player` (-1 before joining).
  std::vector<Outbound> handle_message(int player, const Json& msg) {
    std::vector<Outbound> out;
    const std::string type = msg.value("type", "");
    const std::int64_t seq = msg.value("seq", std::int64_t{-1});
    if (type == "join") return join(msg, seq);
    if (player < 0 || player > 1 || !is_human(player) || !joined_[player]) {
      out.push_back({player, reject(seq, "join the session first")});
      return out;
    }
    if (seq <= last_seq_[player]) {
      // Retries and stale messages leave the session untouched.
      out.push_back({player, reject(seq, "duplicate sequence number")});
      out.push_back({player, state_message(player)});
      return out;
    }
    last_seq_[player] = seq;
    if (type == "ping") {
      out.push_back({player, Json{{"type", "pong"}, {"session", id_}, {"seq", seq}}});
    } else if (type == "resign") {
      finished_ = true;
      in_hand_ = false;
      out.push_back({player, ack(seq)});
      for (int p = 0; p < 2; ++p)
        if (is_human(p)) out.push_back({p, summary(p, "resigned")});
    } else if (type == "act") {
      act(player, msg, seq, out);
    } else {
      out.push_back({player, reject(seq, "unknown message type '" + type + "'")});
    }
    return out;
  }

  // Snapshot of the table as `player` may see it.
  Json state_message(int player) const {
    Json m{{"type", "state"}, {"session", id_}, {"hand", hand_index_}, {"player", player}};
    if (!started_ || finished_) {
      m["status"] = finished_ ? "finished" : "waiting";
      return m;
    }
    const Deck& d = game_->deck();
    const int seat = seat_of(player);
    m["status"] = "playing";
    m["seat"] = seat;
    m["hole"] = d.cards_string(deal_.hole[seat]);
    m["board"] = d.cards_string(state_.board);
    m["betting"] = state_.betting_string();
    m["round"] = state_.round;
    m["pot"] = state_.pot();
    m["committed"] = {state_.total[0], state_.total[1]};
    m["stacks"] = {game_->stack() - state_.total[0], game_->stack() - state_.total[1]};
    m["to_act"] = state_.is_decision() ? state_.actor : -1;
    m["totals"] = {totals_[player], totals_[1 - player]};
    if (state_.is_decision() && state_.actor == seat) m["legal"] = legal_json(state_);
    return m;
  }

  // Description of the legal actions: fold, call (with its cost) and the
  // raise-to bounds.
  Json legal_json(const PublicState& s) const {
    Json l = Json::array();
    if (s.to_call() > 0) l.push_back({{"action", "fold"}});
    l.push_back({{"action", "call"}, {"size", s.to_call()}});
    if (auto b = raise_bounds(s, *game_)) l.push_back({{"action", "raise"}, {"min", b->first}, {"max", b->second}});
    return l;
  }

  // Action chosen for an agent seat; over budget, erroring or illegal
  // agents check/call instead and the hand is flagged.
  Action agent_turn(int player) {
    const auto legal = legal_actions(state_, *game_);
    if (legal.size() == 1) return legal[0];
    Agent& a = *players_[player].agent;
    const auto t0 = std::chrono::steady_clock::now();
    Action act;
    bool ok = true;
    try {
      act = a.act(state_);
    } catch (const std::exception&) {
      ok = false;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!ok || !is_legal(state_, *game_, act) || (cfg_.agent_budget_ms > 0 && ms > cfg_.agent_budget_ms)) {
      flagged_ = true;
      return Action::call();
    }
    return act;
  }

 private:
  Json ack(std::int64_t seq) const { return Json{{"type", "ack"}, {"session", id_}, {"seq", seq}}; }

  Json reject(std::int64_t seq, const std::string& reason, const Json& legal = nullptr) const {
    Json m{{"type", "reject"}, {"session", id_}, {"seq", seq}, {"reason", reason}};
    if (!legal.is_null()) m["legal"] = legal;
    return m;
  }

  Json summary(int player, const std::string& reason) const {
    return Json{{"type", "summary"}, {"session", id_},   {"player", player},
                {"reason", reason},   {"hands", records_.size()}, {"totals", {totals_[player], totals_[1 - player]}}};
  }

  std::vector<Outbound> join(const Json& msg, std::int64_t seq) {
    std::vector<Outbound> out;
    int p = msg.value("player", -1);
    if (p < 0)
      for (int q = 0; q < 2 && p < 0; ++q)
        if (is_human(q) && !joined_[q]) p = q;
    if (p < 0 || p > 1 || !is_human(p)) {
      out.push_back({-1, reject(seq, "no human seat available")});
      return out;
    }
    // Rejoining the same seat resumes it (reconnects keep the sequence).
    joined_[p] = true;
    last_seq_[p] = std::max(last_seq_[p], seq);
    out.push_back({p, Json{{"type", "welcome"},
                           {"session", id_},
                           {"seq", seq},
                           {"player", p},
                           {"protocol", kProtocolVersion},
                           {"game", game_->name()},
                           {"opponent", players_[1 - p].name}}});
    if (!started_ && joined_[0] && joined_[1]) {
      started_ = true;
      start_hand();
      advance(out);
    } else {
      out.push_back({p, state_message(p)});
    }
    return out;
  }

  void act(int player, const Json& msg, std::int64_t seq, std::vector<Outbound>& out) {
    if (!in_hand_ || !state_.is_decision() || player_at(state_.actor) != player) {
      out.push_back({player, reject(seq, "not your turn")});
      return;
    }
    Action a;
    const std::string kind = msg.value("action", "");
    if (kind == "fold") a = Action::fold();
    else if (kind == "call" || kind == "check") a = Action::call();
    else if (kind == "raise" && msg.contains("size") && msg["size"].is_number()) a = Action::raise_to(msg["size"].get<double>());
    else {
      out.push_back({player, reject(seq, "malformed action", legal_json(state_))});
      return;
    }
    if (!is_legal(state_, *game_, a)) {
      out.push_back({player, reject(seq, "illegal action '" + a.str() + "'", legal_json(state_))});
      return;
    }
    out.push_back({player, ack(seq)});
    apply(a);
    advance(out);
  }

  void start_hand() {
    Rng rng(derive_seed(cfg_.seed, 0xdea1, hand_index_));
    deal_ = deal_hand(*game_, rng);
    state_ = initial_state(*game_);
    board_pos_ = 0;
    flagged_ = false;
    in_hand_ = true;
    last_action_ = nullptr;
    for (int p = 0; p < 2; ++p)
      if (players_[p].agent)
        players_[p].agent->begin_hand(seat_of(p), deal_.hole[seat_of(p)], derive_seed(cfg_.seed, hand_index_, p));
  }

  void apply(const Action& a) {
    const int actor = state_.actor;
    state_ = apply_action(state_, *game_, a);
    last_action_ = Json{{"seat", actor}, {"action", a.str()}};
  }

  // Runs chance and agent moves until a human must act or the session ends,
  // then tells every human what it may see.
  void advance(std::vector<Outbound>& out) {
    while (in_hand_) {
      if (state_.is_chance()) {
        const auto k = static_cast<std::size_t>(cards_to_deal(state_, *game_));
        const std::vector<Card> cards(deal_.board.begin() + static_cast<std::ptrdiff_t>(board_pos_),
                                      deal_.board.begin() + static_cast<std::ptrdiff_t>(board_pos_ + k));
        board_pos_ += k;
        state_ = deal(state_, *game_, cards);
      } else if (state_.is_terminal()) {
        finish_hand(out);
        if (cfg_.max_hands > 0 && static_cast<long>(records_.size()) >= cfg_.max_hands) {
          finished_ = true;
          for (int p = 0; p < 2; ++p)
            if (is_human(p)) out.push_back({p, summary(p, "hand limit reached")});
          return;
        }
        ++hand_index_;
        start_hand();
      } else {
        const int p = player_at(state_.actor);
        if (is_human(p)) break;
        apply(agent_turn(p));
      }
    }
    for (int p = 0; p < 2; ++p) {
      if (!is_human(p)) continue;
      Json m = state_message(p);
      if (!last_action_.is_null()) m["last_action"] = last_action_;
      out.push_back({p, std::move(m)});
    }
  }

  void finish_hand(std::vector<Outbound>& out) {
    HandRecord r;
    r.index = hand_index_;
    r.betting = state_.betting_string();
    r.hole = deal_.hole;
    r.board = state_.board;
    r.net = terminal_net(*game_, state_, r.hole);
    for (int s = 0; s < 2; ++s) r.names[s] = players_[player_at(s)].name;
    r.flagged = flagged_;
    for (int s = 0; s < 2; ++s) totals_[player_at(s)] += r.net[s];
    if (cfg_.history) *cfg_.history << format_hand(*game_, r) << std::endl;
    const bool showdown = state_.folder < 0;
    const Deck& d = game_->deck();
    for (int p = 0; p < 2; ++p) {
      if (!is_human(p)) continue;
      const int seat = seat_of(p);
      Json cards = Json::array({nullptr, nullptr});
      cards[seat] = d.cards_string(r.hole[seat]);
      if (showdown) cards[1 - seat] = d.cards_string(r.hole[1 - seat]);
      out.push_back({p, Json{{"type", "result"},
                             {"session", id_},
                             {"hand", hand_index_},
                             {"seat", seat},
                             {"betting", r.betting},
                             {"board", d.cards_string(r.board)},
                             {"cards", cards},
                             {"showdown", showdown},
                             {"net", {r.net[0], r.net[1]}},
                             {"totals", {totals_[p], totals_[1 - p]}},
                             {"flagged", r.flagged}}});
    }
    records_.push_back(std::move(r));
    in_hand_ = false;
  }

  std::string id_;
  GamePtr game_;
  std::array<Player, 2> players_;
  SessionConfig cfg_;
  std::array<bool, 2> joined_{false, false};
  std::array<std::int64_t, 2> last_seq_{-1, -1};
  std::array<double, 2> totals_{0, 0};
  std::vector<HandRecord> records_;
  bool started_ = false, in_hand_ = false, finished_ = false, flagged_ = false;
  std::uint64_t hand_index_ = 0;
  Deal deal_;
  PublicState state_;
  std::size_t board_pos_ = 0;
  Json last_action_;
};

}  // namespace dstack
