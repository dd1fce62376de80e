#pragma once

#include <memory>
#include <span>
#include <vector>

#include "dstack/lookahead/value_fn.hpp"
#include "dstack/valuenet/bucketing.hpp"
#include "dstack/valuenet/dataset.hpp"
#include "dstack/valuenet/model.hpp"
#include "dstack/valuenet/sampling.hpp"

namespace dstack {

// Chip-valued counterfactual values for arbitrary (unnormalized) ranges:
// ranges are normalized for the network and the outputs rescaled by the pot
// and the other player's range mass.
inline CfvPair evaluate_model(const CfvModel& model, const GameSpec& g, const BucketMap& bm,
                              std::span<const Card> board, Chips pot, std::span<const double> r1,
                              std::span<const double> r2) {
  const ModelArch& a = model.arch();
  if (a.game != g.name()) throw Error("model is for game '" + a.game + "'");
  if (static_cast<int>(board.size()) != g.board_cards_before_round(a.round)) throw Error("board does not match the model round");
  const int n = g.num_hands();
  if (static_cast<int>(r1.size()) != n || static_cast<int>(r2.size()) != n) throw Error("range has the wrong size");
  double m1 = 0, m2 = 0;
  for (int h = 0; h < n; ++h) {
    if (bm.bucket[h] < 0 && (r1[h] != 0 || r2[h] != 0)) throw Error("range puts mass on a board-blocked hand");
    m1 += r1[h];
    m2 += r2[h];
  }
  std::vector<double> n1(r1.begin(), r1.end()), n2(r2.begin(), r2.end());
  if (m1 > 0)
    for (double& x : n1) x /= m1;
  if (m2 > 0)
    for (double& x : n2) x /= m2;
  Mat x(a.inputs(), 1);
  model_input(g, bm, n1, n2, pot, x.data());
  const Mat z = model.forward(x);
  const int k = a.buckets;
  CfvPair out;
  out.v1 = bm.spread(std::span<const double>(z.data(), k));
  out.v2 = bm.spread(std::span<const double>(z.data() + k, k));
  for (double& v : out.v1) v *= pot * m2;
  for (double& v : out.v2) v *= pot * m1;
  return out;
}

inline CfvPair evaluate_model(const CfvModel& model, const GameSpec& g, const Situation& sit) {
  if (sit.round != model.arch().round) throw Error("situation round does not match the model");
  return evaluate_model(model, g, bucket_hands(g, sit.board, model.arch().buckets), sit.board, sit.pot, sit.r1, sit.r2);
}

// Value function backed by a trained model for the states at the start of
// its round.
class ModelValueFn : public ValueFn {
 public:
  ModelValueFn(GamePtr game, std::shared_ptr<const CfvModel> model)
      : game_(std::move(game)), model_(std::move(model)), buckets_(game_, model_->arch().buckets) {
    if (model_->arch().game != game_->name()) throw Error("model is for game '" + model_->arch().game + "'");
  }

  CfvPair evaluate(const PublicState& s, std::span<const double> r1, std::span<const double> r2,
                   Chips pot) const override {
    if (pot != s.pot()) throw Error("pot does not match the state");
    if (s.round != model_->arch().round) throw Error("state round does not match the model");
    return evaluate_model(*model_, *game_, buckets_.get(s.board), s.board, pot, r1, r2);
  }

  const CfvModel& model() const { return *model_; }

 private:
  GamePtr game_;
  std::shared_ptr<const CfvModel> model_;
  BucketCache buckets_;
};

// Values at the end of `sit.round`, before the next public cards: the chance
// average of the next round's model over every deal, ranges restricted to
// the hands each deal allows.
inline CfvPair auxiliary_targets(const CfvModel& next, const GameSpec& g, const Situation& sit) {
  if (next.arch().round != sit.round + 1) throw Error("auxiliary targets need the next round's model");
  const int k = g.round(sit.round + 1).board_cards;
  const int n = g.num_hands();
  const int live = g.deck().size() - static_cast<int>(sit.board.size()) - 2 * g.hands().cards_per_hand();
  const double w = 1.0 / static_cast<double>(binomial(live, k));
  CfvPair out{CfvVector(n, 0.0), CfvVector(n, 0.0)};
  for (const auto& deal : card_subsets(g.deck().size(), mask_of(sit.board), k)) {
    std::vector<Card> board = sit.board;
    board.insert(board.end(), deal.begin(), deal.end());
    std::sort(board.begin(), board.end());
    const BucketMap bm = bucket_hands(g, board, next.arch().buckets);
    const auto valid = g.hands().board_mask(mask_of(board));
    Range r1(n), r2(n);
    for (int h = 0; h < n; ++h) {
      r1[h] = sit.r1[h] * valid[h];
      r2[h] = sit.r2[h] * valid[h];
    }
    const auto v = evaluate_model(next, g, bm, board, sit.pot, r1, r2);
    for (int h = 0; h < n; ++h) {
      out.v1[h] += w * v.v1[h];
      out.v2[h] += w * v.v2[h];
    }
  }
  return out;
}

}  // namespace dstack
