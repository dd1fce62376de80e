#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dstack/core/error.hpp"
#include "dstack/core/game_spec.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/core/state.hpp"
#include "dstack/resolving/continual.hpp"
#include "dstack/solver/strategy.hpp"

namespace dstack {

// Fold when facing a wager, otherwise check.
class FoldPolicy : public Policy {
 public:
  explicit FoldPolicy(GamePtr g) : g_(std::move(g)) {}
  void action_probs(const PublicState& s, const std::vector<Action>& actions, std::vector<double>& out) const override {
    std::vector<double> row;
    public_probs(s, actions, row);
    tile(row, out);
  }
  bool is_public() const override { return true; }
  void public_probs(const PublicState&, const std::vector<Action>& actions, std::vector<double>& out) const override {
    out.assign(actions.size(), 0.0);
    out[0] = 1;  // fold if present, else call (check)
  }

 protected:
  void tile(const std::vector<double>& row, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(g_->num_hands()) * row.size());
    for (int h = 0; h < g_->num_hands(); ++h) std::copy(row.begin(), row.end(), out.begin() + h * row.size());
  }
  GamePtr g_;
};

// Always check or call.
class CallPolicy : public FoldPolicy {
 public:
  using FoldPolicy::FoldPolicy;
  void public_probs(const PublicState&, const std::vector<Action>& actions, std::vector<double>& out) const override {
    out.assign(actions.size(), 0.0);
    for (std::size_t i = 0; i < actions.size(); ++i)
      if (actions[i].kind == ActionKind::kCall) out[i] = 1;
  }
  void action_probs(const PublicState& s, const std::vector<Action>& actions, std::vector<double>& out) const override {
    std::vector<double> row;
    public_probs(s, actions, row);
    tile(row, out);
  }
};

// Smallest raise whenever one is allowed, otherwise call.
class RaisePolicy : public FoldPolicy {
 public:
  using FoldPolicy::FoldPolicy;
  void public_probs(const PublicState&, const std::vector<Action>& actions, std::vector<double>& out) const override {
    out.assign(actions.size(), 0.0);
    int pick = -1;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (actions[i].kind == ActionKind::kRaise && (pick < 0 || actions[i].to < actions[pick].to))
        pick = static_cast<int>(i);
    }
    if (pick < 0)
      for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i].kind == ActionKind::kCall) pick = static_cast<int>(i);
    out[pick] = 1;
  }
  void action_probs(const PublicState& s, const std::vector<Action>& actions, std::vector<double>& out) const override {
    std::vector<double> row;
    public_probs(s, actions, row);
    tile(row, out);
  }
};

// Uniform over the offered actions.
class UniformPolicy : public FoldPolicy {
 public:
  using FoldPolicy::FoldPolicy;
  void public_probs(const PublicState&, const std::vector<Action>& actions, std::vector<double>& out) const override {
    out.assign(actions.size(), 1.0 / static_cast<double>(actions.size()));
  }
  void action_probs(const PublicState& s, const std::vector<Action>& actions, std::vector<double>& out) const override {
    std::vector<double> row;
    public_probs(s, actions, row);
    tile(row, out);
  }
};

// Actions and per-hand probabilities (hands x actions) at one state.
struct AgentStrategy {
  std::vector<Action> actions;
  std::vector<double> probs;
};

// A player in matches, LBR runs and the service. Agents that expose their
// probabilities can be evaluated by LBR and exploitability extraction.
class Agent {
 public:
  explicit Agent(GamePtr game) : game_(std::move(game)) {}
  virtual ~Agent() = default;

  virtual std::string name() const = 0;

  // Starts a hand in `seat`. `hole` may be empty when only probabilities are
  // queried. The seed drives any sampling in this hand.
  virtual void begin_hand(int seat, std::span<const Card> hole, std::uint64_t seed) {
    seat_ = seat;
    hole_.assign(hole.begin(), hole.end());
    rng_.seed(seed);
  }

  virtual bool exposes_strategy() const { return true; }

  // Full strategy at a state where this agent acts.
  virtual AgentStrategy strategy(const PublicState& s) = 0;

  // Probability of `a` at `s` for every private hand.
  virtual std::vector<double> action_probability(const PublicState& s, const Action& a) {
    const AgentStrategy st = strategy(s);
    const std::size_t na = st.actions.size();
    std::vector<double> p(static_cast<std::size_t>(game_->num_hands()), 0.0);
    for (std::size_t i = 0; i < na; ++i)
      if (st.actions[i] == a)
        for (std::size_t h = 0; h < p.size(); ++h) p[h] = st.probs[h * na + i];
    return p;
  }

  // Action for the held hand, sampled from the strategy.
  virtual Action act(const PublicState& s) {
    const int h = game_->hands().index(hole_);
    if (h < 0) throw InvalidState("agent has no hand");
    const AgentStrategy st = strategy(s);
    const std::size_t na = st.actions.size();
    return st.actions[static_cast<std::size_t>(
        sample_index(rng_, std::span<const double>(st.probs.data() + h * na, na)))];
  }

  int seat() const { return seat_; }
  const GamePtr& game() const { return game_; }

 protected:
  GamePtr game_;
  int seat_ = 0;
  std::vector<Card> hole_;
  Rng rng_;
};

using AgentPtr = std::shared_ptr<Agent>;

// Plays a fixed Policy over the legal actions.
class PolicyAgent : public Agent {
 public:
  PolicyAgent(GamePtr game, std::string name, std::shared_ptr<const Policy> policy)
      : Agent(std::move(game)), name_(std::move(name)), policy_(std::move(policy)) {}

  std::string name() const override { return name_; }

  AgentStrategy strategy(const PublicState& s) override {
    AgentStrategy st{legal_actions(s, *game_), {}};
    policy_->action_probs(s, st.actions, st.probs);
    return st;
  }

  std::vector<double> action_probability(const PublicState& s, const Action& a) override {
    if (!policy_->is_public()) return Agent::action_probability(s, a);
    const auto acts = legal_actions(s, *game_);
    std::vector<double> row;
    policy_->public_probs(s, acts, row);
    double p = 0;
    for (std::size_t i = 0; i < acts.size(); ++i)
      if (acts[i] == a) p = row[i];
    return std::vector<double>(static_cast<std::size_t>(game_->num_hands()), p);
  }

  Action act(const PublicState& s) override {
    if (!policy_->is_public()) return Agent::act(s);
    const auto acts = legal_actions(s, *game_);
    std::vector<double> row;
    policy_->public_probs(s, acts, row);
    return acts[static_cast<std::size_t>(sample_index(rng_, row))];
  }

  const Policy& policy() const { return *policy_; }

 private:
  std::string name_;
  std::shared_ptr<const Policy> policy_;
};

// Replays a fixed list of actions, falling back to check/call; it does not
// expose probabilities.
class ScriptedAgent : public Agent {
 public:
  ScriptedAgent(GamePtr game, std::vector<Action> script) : Agent(std::move(game)), script_(std::move(script)) {}
  std::string name() const override { return "scripted"; }
  bool exposes_strategy() const override { return false; }
  void begin_hand(int seat, std::span<const Card> hole, std::uint64_t seed) override {
    Agent::begin_hand(seat, hole, seed);
    next_ = 0;
  }
  AgentStrategy strategy(const PublicState&) override {
    throw UnsupportedAgent("scripted agent does not expose action probabilities");
  }
  std::vector<double> action_probability(const PublicState&, const Action&) override {
    throw UnsupportedAgent("scripted agent does not expose action probabilities");
  }
  Action act(const PublicState& s) override {
    if (next_ < script_.size()) {
      const Action a = script_[next_++];
      if (is_legal(s, *game_, a)) return a;
    }
    return Action::call();
  }

 private:
  std::vector<Action> script_;
  std::size_t next_ = 0;
};

// One step of a public history.
struct HistoryEvent {
  bool is_deal = false;
  int actor = -1;  // acting seat for actions
  Action action;
  std::vector<Card> cards;
  PublicState before;  // state the event applies to
};

// The sequence of actions and deals leading from the root to `s`.
inline std::vector<HistoryEvent> public_history(const GameSpec& g, const PublicState& s) {
  std::vector<HistoryEvent> out;
  PublicState cur = initial_state(g);
  std::size_t pos = 0;
  auto reached = [&] {
    return cur.round == s.round && cur.board.size() == s.board.size() &&
           cur.actions_this_round() == s.actions_this_round() && cur.betting.size() == s.betting.size();
  };
  while (!reached()) {
    if (cur.is_terminal()) throw InvalidState("state is not reachable from the root");
    HistoryEvent e;
    e.before = cur;
    if (cur.is_chance()) {
      const int k = cards_to_deal(cur, g);
      if (pos + static_cast<std::size_t>(k) > s.board.size()) throw InvalidState("history runs past the board");
      e.is_deal = true;
      e.cards.assign(s.board.begin() + static_cast<std::ptrdiff_t>(pos), s.board.begin() + static_cast<std::ptrdiff_t>(pos) + k);
      pos += static_cast<std::size_t>(k);
      cur = deal(cur, g, e.cards);
    } else {
      const auto& round = s.betting.at(static_cast<std::size_t>(cur.round));
      const auto i = static_cast<std::size_t>(cur.actions_this_round());
      if (i >= round.size()) throw InvalidState("history runs past the betting");
      e.actor = cur.actor;
      e.action = round[i];
      cur = apply_action(cur, g, e.action);
    }
    out.push_back(std::move(e));
  }
  return out;
}

// Continual re-solving agent. Its strategy depends on the public history
// only, so contexts are rebuilt from the history and re-solves are memoized
// per public state.
class ResolveAgent : public Agent {
 public:
  ResolveAgent(GamePtr game, std::shared_ptr<ContinualResolver> resolver, std::string name = "resolve")
      : Agent(std::move(game)), resolver_(std::move(resolver)), name_(std::move(name)) {}

  std::string name() const override { return name_; }

  void begin_hand(int seat, std::span<const Card> hole, std::uint64_t seed) override {
    if (seat != seat_) memo_.clear();
    Agent::begin_hand(seat, hole, seed);
    if (memo_.size() > kMemoLimit) memo_.clear();
  }

  AgentStrategy strategy(const PublicState& s) override {
    if (!s.is_decision() || s.actor != seat_) throw InvalidState("agent is not to act");
    ResolveContext ctx = context_at(s);
    if (ctx.scale <= 0) {
      // No hand of ours reaches this state; any strategy is as good.
      AgentStrategy st{legal_actions(s, *game_), {}};
      st.probs.assign(static_cast<std::size_t>(game_->num_hands()) * st.actions.size(),
                      1.0 / static_cast<double>(st.actions.size()));
      return st;
    }
    const auto out = resolve(ctx);
    return {out->actions, out->strategy};
  }

  ContinualResolver& resolver() { return *resolver_; }

 private:
  static constexpr std::size_t kMemoLimit = 100000;

  std::shared_ptr<const ResolveOutput> resolve(const ResolveContext& ctx) {
    const std::string key = ctx.current.key(game_->deck());
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    auto out = resolver_->resolve(ctx);
    memo_.emplace(key, out);
    return out;
  }

  ResolveContext context_at(const PublicState& s) {
    ResolveContext ctx = resolver_->start(seat_);
    for (const HistoryEvent& e : public_history(*game_, s)) {
      if (e.is_deal) {
        ctx = update_chance(ctx, e.cards, *game_);
      } else if (e.actor == seat_) {
        if (ctx.scale <= 0) {
          ctx = update_opponent_action(ctx, e.action, *game_);
          continue;
        }
        ctx = update_own_action(ctx, e.action, resolve(ctx), *game_);
      } else {
        ctx = update_opponent_action(ctx, e.action, *game_);
      }
    }
    return ctx;
  }

  std::shared_ptr<ContinualResolver> resolver_;
  std::string name_;
  std::map<std::string, std::shared_ptr<const ResolveOutput>> memo_;
};

}  // namespace dstack
