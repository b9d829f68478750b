#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tim4rec/data.hpp"
#include "tim4rec/model.hpp"

namespace tim4rec {

struct TrainConfig {
  double lr = 0.01;
  int64_t batch = 2048;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t max_epochs = 200;
  int64_t patience = 10;   // stop once this many epochs pass without a new best
  uint64_t seed = 42;
  double clip = 0.0;       // global-norm gradient clip; 0 disables
  void validate() const;
};

struct OptimizerState {
  std::vector<Tensor> m;  // first moments, parameter order
  std::vector<Tensor> v;  // second moments
  int64_t step = 0;
};

OptimizerState init_optimizer(const Model& model);

// One bias-corrected Adam update over the registered parameters. Throws on a
// non-finite gradient (naming the parameter) before touching anything.
void adam_step(const std::vector<std::pair<std::string, Tensor*>>& params,
               const std::vector<Tensor>& grads, OptimizerState& state, const TrainConfig& cfg);

struct EpochRow {
  int64_t epoch = 0;
  double loss = 0.0;   // mean cross-entropy per training target
  double hr10 = 0.0;   // validation metrics at K=10
  double ndcg10 = 0.0;
  double mrr10 = 0.0;
};

struct TrainHistory {
  std::vector<EpochRow> rows;
  int64_t best_epoch = -1;
  double best_ndcg10 = -1.0;
  bool diverged = false;
};

// "epoch,loss,hr10,ndcg10,mrr10" lines under a header.
std::string history_csv(const TrainHistory& h);

// Full loop: per-epoch shuffled batches, next-item cross-entropy over the
// training region, Adam updates (pad row re-frozen after each), validation
// NDCG@10 tracking with early stopping. The model is left holding the best
// parameters seen. On divergence the loop stops with the best checkpoint
// restored and the flag set. `on_epoch`, when given, fires after each epoch.
TrainHistory train(Model& model, const SequenceDataset& ds, const TrainConfig& cfg,
                   const std::function<void(const EpochRow&)>& on_epoch = {});

struct GradVerifyGroup {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradVerifyReport {
  std::vector<GradVerifyGroup> groups;
  double worst = 0.0;
  bool pass = false;  // every group below 1e-4
};

// Finite-difference audit of the full loss gradient, one group per named
// parameter. Requires dropout to be off (the probe must be deterministic).
GradVerifyReport verify_gradients(const ModelConfig& cfg, uint64_t seed = 5);

}  // namespace tim4rec
