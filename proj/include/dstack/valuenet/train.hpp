#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

#include "dstack/valuenet/dataset.hpp"
#include "dstack/valuenet/model.hpp"

namespace dstack {

struct TrainConfig {
  int buckets = 0;  // 0: one per hand
  int layers = 3;
  int width = 64;
  int batch = 128;
  int epochs = 200;
  double lr = 1e-3;
  int decay_epoch = 150;  // learning rate x0.1 from this epoch on
  double validation = 0.1;  // fraction held out (the tail of the dataset)
  std::uint64_t seed = 1;
};

struct TrainResult {
  CfvModel model;  // parameters of the epoch with the lowest validation loss
  std::vector<double> train_loss, validation_loss;
  int best_epoch = -1;
  double best_validation = 0;
};

// Mean Huber loss of `model` on the examples in `idx`.
inline double dataset_loss(const GameSpec& g, const CfvModel& model, const Dataset& d, const BucketCache& buckets,
                           const std::vector<std::size_t>& idx) {
  const int k = model.arch().buckets;
  double total = 0;
  const std::size_t chunk = 1024;
  for (std::size_t i = 0; i < idx.size(); i += chunk) {
    const std::size_t c = std::min(chunk, idx.size() - i);
    total += model.loss(make_batch(g, d, buckets, k, idx, i, c)) * static_cast<double>(c);
  }
  return idx.empty() ? 0 : total / static_cast<double>(idx.size());
}

inline TrainResult train(GamePtr game, const Dataset& d, const TrainConfig& cfg,
                         const std::function<void(int, double, double)>& progress = {}) {
  if (d.examples.empty()) throw Error("training needs a non-empty dataset");
  if (d.game != game->name()) throw Error("dataset is for game '" + d.game + "'");
  if (cfg.batch < 1 || cfg.epochs < 1 || cfg.validation <= 0 || cfg.validation >= 1) throw Error("bad training config");
  const std::size_t n = d.examples.size();
  const auto nval = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(cfg.validation * static_cast<double>(n))));
  if (nval >= n) throw Error("dataset too small for a validation split");
  std::vector<std::size_t> train_idx(n - nval), val_idx(nval);
  std::iota(train_idx.begin(), train_idx.end(), 0);
  std::iota(val_idx.begin(), val_idx.end(), n - nval);

  ModelArch arch{d.game, d.round, cfg.buckets > 0 ? cfg.buckets : game->num_hands(), cfg.layers, cfg.width};
  TrainResult res;
  res.model = CfvModel(arch, derive_seed(cfg.seed, 0));
  const BucketCache buckets(game, arch.buckets);
  CfvModel best = res.model;
  Adam adam(res.model.params().size());
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<double> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = epoch >= cfg.decay_epoch ? cfg.lr * 0.1 : cfg.lr;
    shuffle(rng, train_idx);
    double sum = 0;
    for (std::size_t i = 0; i < train_idx.size(); i += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t c = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), train_idx.size() - i);
      const Batch b = make_batch(*game, d, buckets, arch.buckets, train_idx, i, c);
      const double l = res.model.loss_and_grad(b, grad);
      if (!std::isfinite(l)) {
        std::ostringstream os;
        os << "training diverged at epoch " << epoch << ", batch starting " << i << " (loss " << l << ", lr " << lr
           << ")";
        throw TrainingDiverged(os.str());
      }
      sum += l * static_cast<double>(c);
      adam.step(res.model.params(), grad, lr);
    }
    const double tl = sum / static_cast<double>(train_idx.size());
    const double vl = dataset_loss(*game, res.model, d, buckets, val_idx);
    res.train_loss.push_back(tl);
    res.validation_loss.push_back(vl);
    if (res.best_epoch < 0 || vl < res.best_validation) {
      res.best_epoch = epoch;
      res.best_validation = vl;
      best = res.model;
    }
    if (progress) progress(epoch, tl, vl);
  }
  res.model = std::move(best);
  return res;
}

}  // namespace dstack
