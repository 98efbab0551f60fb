#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "srnn/network.hpp"

namespace srnn {

struct TrainConfig {
  double lr0 = 0.01;
  std::vector<int> decay_epochs = {10, 50, 120, 200};
  double decay_factor = 0.5;
  int batch = 64;
  int epochs = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 10.0;
  bool train_tau_m = true;
  bool train_tau_adp = true;
  // Time constants live on a tens-to-hundreds-of-ms scale while weights sit
  // in [-1,1]; uniform Adam steps would leave them effectively frozen at
  // desk-scale step counts, so the tau group gets its own multiplier.
  double tau_lr_mult = 5.0;
  std::uint64_t seed = 1;
  int threads = 1;
  double val_fraction = 0.10;
  bool verbose = false;
  // Stop once validation (or test) accuracy reaches this level (0 disables).
  double stop_at_val_acc = 0.0;
  double stop_at_test_acc = 0.0;
};

// lr = lr0 * factor^(number of decay epochs <= epoch)
double schedule(const TrainConfig& cfg, int epoch);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step = 0;
};

AdamState make_adam_state(const std::vector<Tensor>& params);

// One Adam update from the grads currently held by `params`. Returns false
// (and leaves everything untouched) when any gradient is non-finite.
// `lr_scale`, when given, holds one learning-rate multiplier per parameter.
bool adam_step(const std::vector<Tensor>& params, AdamState& state, double lr,
               const TrainConfig& cfg,
               const std::vector<double>* lr_scale = nullptr);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::vector<double> layer_fr;  // NaN for non-spiking layers
  double lr = 0.0;
  double wall_seconds = 0.0;
  double grad_norm = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> layer_fr;
  std::vector<std::size_t> confusion;  // K*K, row = true class
  std::size_t classes = 0;
};

EvalResult evaluate(const Network& net, const Dataset& dataset,
                    std::uint64_t seed = 0xe5a1, int batch = 64);

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;
  std::vector<std::vector<double>> best_weights;  // snapshot, params() order
  int skipped_steps = 0;  // non-finite gradient incidents

  void restore_best(Network& net) const;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

// Optimization loop: seed-deterministic shuffling, minibatch forward/backward
// (sharded over `threads` worker tapes with an ordered gradient reduction),
// global-norm clipping, Adam with the decay schedule, per-epoch validation
// and best-checkpoint tracking. `test` (optional) is only evaluated for
// reporting, never for selection.
TrainResult train(Network& net, const Dataset& train_data,
                  const TrainConfig& cfg, const Dataset* test = nullptr,
                  const MetricsSink& sink = nullptr);

}  // namespace srnn
