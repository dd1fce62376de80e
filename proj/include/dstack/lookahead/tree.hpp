#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "dstack/core/cards.hpp"
#include "dstack/core/error.hpp"
#include "dstack/core/game_spec.hpp"
#include "dstack/core/state.hpp"
#include "dstack/lookahead/action_menu.hpp"

namespace dstack {

enum class NodeKind : std::uint8_t { kDecision, kChance, kTerminal, kLeaf };

enum class DepthLimit : std::uint8_t {
  kFullGame,    // expand to terminals
  kEndOfRound,  // stop at the first round-start state after the root's round
};

struct TreeNode {
  PublicState state;
  NodeKind kind = NodeKind::kTerminal;
  int parent = -1;
  int layer = 0;                  // decision ancestors between the root and this node
  std::vector<int> children;
  std::vector<Action> actions;    // kDecision: one per child
  std::vector<std::vector<Card>> deals;  // kChance: one per child
  double chance_weight = 0;       // kChance: probability of each deal given both hands
};

// Public tree rooted at an arbitrary public state. Nodes are stored in DFS
// preorder, so parents precede children and subtrees are contiguous.
class PublicTree {
 public:
  PublicTree(GamePtr game, const PublicState& root, ActionMenu menu, DepthLimit limit,
             std::size_t max_nodes = 2'000'000)
      : game_(std::move(game)), menu_(std::move(menu)), limit_(limit), max_nodes_(max_nodes) {
    if (root.is_terminal()) throw InvalidState("cannot build a tree at a terminal state");
    expand(root, -1, 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      index_.emplace(nodes_[i].state.key(game_->deck()), static_cast<int>(i));
      if (nodes_[i].kind == NodeKind::kLeaf) leaves_.push_back(static_cast<int>(i));
      if (nodes_[i].kind == NodeKind::kTerminal) terminals_.push_back(static_cast<int>(i));
    }
  }

  const GameSpec& game() const { return *game_; }
  const GamePtr& game_ptr() const { return game_; }
  const ActionMenu& menu() const { return menu_; }
  DepthLimit depth_limit() const { return limit_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int i) const { return nodes_[i]; }
  const TreeNode& root() const { return nodes_[0]; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<int>& leaves() const { return leaves_; }
  const std::vector<int>& terminals() const { return terminals_; }

  // Node index of a public state key, or -1.
  int find(const std::string& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? -1 : it->second;
  }

  // Child of a decision node reached by `a`, or -1.
  int child_by_action(int n, const Action& a) const {
    const TreeNode& t = nodes_[n];
    for (std::size_t i = 0; i < t.actions.size(); ++i)
      if (t.actions[i] == a) return t.children[i];
    return -1;
  }

  // Child of a chance node reached by dealing `cards` (any order), or -1.
  int child_by_deal(int n, std::vector<Card> cards) const {
    std::sort(cards.begin(), cards.end());
    const TreeNode& t = nodes_[n];
    for (std::size_t i = 0; i < t.deals.size(); ++i)
      if (t.deals[i] == cards) return t.children[i];
    return -1;
  }

 private:
  int expand(const PublicState& s, int parent, int layer) {
    if (nodes_.size() >= max_nodes_)
      throw GameTooLarge("public tree exceeds " + std::to_string(max_nodes_) + " nodes");
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[id].state = s;
    nodes_[id].parent = parent;
    nodes_[id].layer = layer;
    const int root_round = nodes_[0].state.round;
    if (s.is_terminal()) {
      nodes_[id].kind = NodeKind::kTerminal;
      return id;
    }
    if (s.is_decision()) {
      if (limit_ == DepthLimit::kEndOfRound && s.round > root_round && parent >= 0) {
        nodes_[id].kind = NodeKind::kLeaf;
        return id;
      }
      nodes_[id].kind = NodeKind::kDecision;
      const std::vector<Action> acts = menu_actions(s, *game_, menu_, layer);
      nodes_[id].actions = acts;
      for (const Action& a : acts) {
        const int c = expand(apply_action(s, *game_, a), id, layer + 1);
        nodes_[id].children.push_back(c);
      }
      return id;
    }
    nodes_[id].kind = NodeKind::kChance;
    const int k = cards_to_deal(s, *game_);
    const int live = game_->deck().size() - static_cast<int>(s.board.size()) - 2 * game_->hands().cards_per_hand();
    nodes_[id].chance_weight = 1.0 / static_cast<double>(binomial(live, k));
    const auto deals = card_subsets(game_->deck().size(), mask_of(s.board), k);
    nodes_[id].deals = deals;
    for (const auto& d : deals) {
      const int c = expand(deal(s, *game_, d), id, layer);
      nodes_[id].children.push_back(c);
    }
    return id;
  }

  GamePtr game_;
  ActionMenu menu_;
  DepthLimit limit_;
  std::size_t max_nodes_;
  std::vector<TreeNode> nodes_;
  std::vector<int> leaves_;
  std::vector<int> terminals_;
  std::unordered_map<std::string, int> index_;
};

using TreePtr = std::shared_ptr<const PublicTree>;

inline TreePtr build_tree(GamePtr game, const PublicState& root, const ActionMenu& menu, DepthLimit limit,
                          std::size_t max_nodes = 2'000'000) {
  return std::make_shared<const PublicTree>(std::move(game), root, menu, limit, max_nodes);
}

}  // namespace dstack
