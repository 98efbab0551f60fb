#include "srnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <thread>

namespace srnn {

namespace {

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return x;
}

bool is_tau_name(const std::string& name) {
  return name.find("tau") != std::string::npos;
}

void apply_tau_flags(Network& net, const TrainConfig& cfg) {
  for (auto& [name, t] : net.named_params()) {
    if (name.find("tau_m") != std::string::npos)
      t.set_requires_grad(cfg.train_tau_m);
    else if (name.find("tau_adp") != std::string::npos)
      t.set_requires_grad(cfg.train_tau_adp);
  }
}

}  // namespace

double schedule(const TrainConfig& cfg, int epoch) {
  int decays = 0;
  for (int e : cfg.decay_epochs)
    if (e <= epoch) ++decays;
  return cfg.lr0 * std::pow(cfg.decay_factor, decays);
}

AdamState make_adam_state(const std::vector<Tensor>& params) {
  AdamState state;
  for (const auto& p : params) {
    state.m.emplace_back(p.numel(), 0.0);
    state.v.emplace_back(p.numel(), 0.0);
  }
  return state;
}

bool adam_step(const std::vector<Tensor>& params, AdamState& state, double lr,
               const TrainConfig& cfg, const std::vector<double>* lr_scale) {
  for (const auto& p : params)
    if (p.has_grad() && !all_finite(p.grad())) return false;

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].node()->value;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const bool has_grad = params[i].has_grad();
    const auto& grad = params[i].grad();
    const double lr_i = lr_scale ? lr * (*lr_scale)[i] : lr;
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = has_grad ? grad[j] : 0.0;
      m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g;
      v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      value[j] -= lr_i * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
  return true;
}

// ---- evaluation ---------------------------------------------------------------

EvalResult evaluate(const Network& net, const Dataset& dataset,
                    std::uint64_t seed, int batch) {
  if (dataset.size() == 0)
    throw std::invalid_argument("evaluate: empty dataset");
  const std::size_t K = net.output_width();
  EvalResult res;
  res.classes = K;
  res.confusion.assign(K * K, 0);

  const std::size_t n_hidden = net.hidden.size();
  const bool spiking_out = net.spiking_output();
  std::vector<double> spike_sums(n_hidden + (spiking_out ? 1 : 0), 0.0);
  std::vector<double> spike_slots(spike_sums.size(), 0.0);

  std::mt19937_64 rng(mix64(seed, 0xe5a1));
  std::size_t correct = 0, total = 0;

  for (std::size_t start = 0; start < dataset.size();
       start += static_cast<std::size_t>(batch)) {
    const std::size_t end =
        std::min(dataset.size(), start + static_cast<std::size_t>(batch));
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    BatchInput in = make_batch(dataset, idx);
    ForwardOptions opts;
    opts.membrane_rng = &rng;
    ForwardResult fwd = forward(net, in, opts);

    for (std::size_t l = 0; l < n_hidden; ++l) {
      spike_sums[l] += fwd.hidden_spike_sums[l];
      spike_slots[l] += static_cast<double>(fwd.T * fwd.B * net.hidden[l].width);
    }
    if (spiking_out) {
      spike_sums[n_hidden] += fwd.out_spike_sum;
      spike_slots[n_hidden] += static_cast<double>(fwd.T * fwd.B * K);
    }

    for (std::size_t b = 0; b < fwd.B; ++b) {
      if (dataset.task_kind == TaskKind::sequence) {
        auto trace = fwd.readout_trace(b);
        std::vector<double> spikes;
        const std::vector<double>* spikes_ptr = nullptr;
        if (net.config.decoder == DecoderKind::spike_count) {
          spikes = fwd.out_spike_trace(b);
          spikes_ptr = &spikes;
        }
        DecodeResult dec =
            decode(net.config.decoder, fwd.T, K, trace, spikes_ptr);
        const auto pred = static_cast<std::size_t>(
            std::max_element(dec.data.begin(), dec.data.end()) -
            dec.data.begin());
        const int truth = dataset.samples[idx[b]].label;
        if (static_cast<int>(pred) == truth) ++correct;
        ++total;
        res.confusion[static_cast<std::size_t>(truth) * K + pred] += 1;
      } else {
        auto trace = fwd.readout_trace(b);
        const auto& labels = dataset.samples[idx[b]].step_labels;
        for (std::size_t t = 0; t < fwd.T; ++t) {
          const double* row = &trace[t * K];
          const auto pred = static_cast<std::size_t>(
              std::max_element(row, row + K) - row);
          const auto truth = static_cast<std::size_t>(labels[t]);
          if (pred == truth) ++correct;
          ++total;
          res.confusion[truth * K + pred] += 1;
        }
      }
    }
  }

  res.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  for (std::size_t l = 0; l < n_hidden; ++l) {
    res.layer_fr.push_back(net.hidden[l].kind == NeuronKind::relu
                               ? std::numeric_limits<double>::quiet_NaN()
                               : spike_sums[l] / spike_slots[l]);
  }
  if (spiking_out)
    res.layer_fr.push_back(net.output_kind() == NeuronKind::relu
                               ? std::numeric_limits<double>::quiet_NaN()
                               : spike_sums[n_hidden] / spike_slots[n_hidden]);
  return res;
}

// ---- training -------------------------------------------------------------------

void TrainResult::restore_best(Network& net) const {
  if (best_epoch < 0) return;
  auto params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i].node()->value = best_weights[i];
}

namespace {

struct ShardOutcome {
  double loss = 0.0;
  double weight = 0.0;
  std::vector<std::vector<double>> grads;
  std::string error;
};

void run_shard(const Network& net, const Dataset& data,
               const std::vector<std::size_t>& indices, TaskKind task,
               std::uint64_t membrane_seed, ShardOutcome& out) {
  try {
    BatchInput in = make_batch(data, indices);
    std::mt19937_64 rng(membrane_seed);
    ForwardOptions opts;
    opts.membrane_rng = &rng;
    Tape tape;
    TapeScope scope(tape);
    LossResult lr = unroll_loss(net, in, task, opts);
    out.loss = lr.loss.item();
    tape.backward(lr.loss, /*release_memory=*/true);
    for (const auto& p : net.params()) {
      if (p.has_grad())
        out.grads.push_back(p.grad());
      else
        out.grads.emplace_back();
      p.node()->grad = {};  // reset leaf grads for the next batch
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
}

}  // namespace

TrainResult train(Network& net, const Dataset& train_data,
                  const TrainConfig& cfg, const Dataset* test,
                  const MetricsSink& sink) {
  using clock = std::chrono::steady_clock;
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.lr0 <= 0.0) throw std::invalid_argument("train: lr0 must be > 0");

  apply_tau_flags(net, cfg);

  Dataset train_set;
  Dataset val_set;
  if (cfg.val_fraction > 0.0) {
    SplitResult split =
        split_validation(train_data, cfg.val_fraction, cfg.seed);
    train_set = std::move(split.train);
    val_set = std::move(split.val);
  } else {
    train_set = train_data;
    val_set = train_data;
  }

  const int threads = std::max(1, cfg.threads);
  std::vector<Network> workers;
  for (int k = 1; k < threads; ++k) {
    workers.push_back(build(net.config));
    apply_tau_flags(workers.back(), cfg);
  }

  auto params = net.params();
  AdamState adam = make_adam_state(params);
  const double tau_floor = 0.1 * net.config.dt;
  auto named = net.named_params();
  std::vector<double> lr_scale;
  for (auto& [name, t] : named)
    lr_scale.push_back(is_tau_name(name) ? cfg.tau_lr_mult : 1.0);

  TrainResult result;
  std::mt19937_64 shuffle_rng(mix64(cfg.seed, 0x5f0f));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  int nonfinite_streak = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = clock::now();
    const double lr = schedule(cfg, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double grad_norm_last = 0.0;

    const auto batch_size = static_cast<std::size_t>(cfg.batch);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::size_t n = end - start;

      // Contiguous shards, one per worker tape; reduced in shard order so
      // the summation is deterministic for a fixed seed and thread count.
      const std::size_t per =
          (n + static_cast<std::size_t>(threads) - 1) /
          static_cast<std::size_t>(threads);
      std::vector<std::vector<std::size_t>> shard_idx;
      for (std::size_t s = start; s < end; s += per) {
        const std::size_t se = std::min(end, s + per);
        shard_idx.emplace_back(order.begin() + s, order.begin() + se);
      }

      for (auto& w : workers) w.copy_values_from(net);

      std::vector<ShardOutcome> outcomes(shard_idx.size());
      std::vector<std::thread> pool;
      for (std::size_t s = 0; s < shard_idx.size(); ++s) {
        outcomes[s].weight =
            static_cast<double>(shard_idx[s].size()) / static_cast<double>(n);
        const Network& worker_net = s == 0 ? net : workers[s - 1];
        const std::uint64_t mseed =
            mix64(cfg.seed, (static_cast<std::uint64_t>(epoch) << 40) ^
                                (batch_index << 8) ^ s);
        if (s == 0) continue;  // shard 0 runs on this thread below
        pool.emplace_back(run_shard, std::cref(worker_net),
                          std::cref(train_set), std::cref(shard_idx[s]),
                          train_set.task_kind, mseed, std::ref(outcomes[s]));
      }
      {
        const std::uint64_t mseed = mix64(
            cfg.seed, (static_cast<std::uint64_t>(epoch) << 40) ^
                          (batch_index << 8));
        run_shard(net, train_set, shard_idx[0], train_set.task_kind, mseed,
                  outcomes[0]);
      }
      for (auto& th : pool) th.join();
      for (const auto& o : outcomes)
        if (!o.error.empty()) throw std::runtime_error(o.error);

      double batch_loss = 0.0;
      for (const auto& o : outcomes) batch_loss += o.weight * o.loss;

      if (!std::isfinite(batch_loss)) {
        if (++nonfinite_streak >= 3)
          throw std::runtime_error(
              "train: loss diverged (non-finite for 3 consecutive batches)");
      } else {
        nonfinite_streak = 0;
      }
      loss_sum += batch_loss;
      ++loss_count;

      // Ordered reduction into the master grads.
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].requires_grad()) continue;
        params[i].node()->ensure_grad();
        auto& g = params[i].node()->grad;
        for (const auto& o : outcomes) {
          if (o.grads[i].empty()) continue;
          for (std::size_t j = 0; j < g.size(); ++j)
            g[j] += o.weight * o.grads[i][j];
        }
      }

      grad_norm_last = clip_grad_norm(params, cfg.clip_norm);
      if (!adam_step(params, adam, lr, cfg, &lr_scale)) {
        ++result.skipped_steps;
        std::cerr << "train: skipped step with non-finite gradients (epoch "
                  << epoch << ", batch " << batch_index << ")\n";
      }
      for (auto& [name, t] : named) {
        if (!is_tau_name(name)) continue;
        for (auto& v : t.value()) v = std::max(v, tau_floor);
      }
      for (auto& p : params) p.node()->grad = {};
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0;
    m.grad_norm = grad_norm_last;
    EvalResult val = evaluate(net, val_set, mix64(cfg.seed, 0x5a1), cfg.batch);
    m.val_accuracy = val.accuracy;
    m.layer_fr = val.layer_fr;
    if (test)
      m.test_accuracy =
          evaluate(net, *test, mix64(cfg.seed, 0x7e57), cfg.batch).accuracy;
    m.wall_seconds =
        std::chrono::duration<double>(clock::now() - t0).count();

    if (m.val_accuracy > result.best_val_accuracy || result.best_epoch < 0) {
      result.best_val_accuracy = m.val_accuracy;
      result.best_epoch = epoch;
      result.best_weights.clear();
      for (const auto& p : params) result.best_weights.push_back(p.value());
    }
    if (sink) sink(m);
    if (cfg.verbose) {
      std::cerr << "epoch " << m.epoch << " loss " << m.train_loss << " val "
                << m.val_accuracy;
      if (m.test_accuracy) std::cerr << " test " << *m.test_accuracy;
      std::cerr << " lr " << m.lr << " (" << m.wall_seconds << "s)\n";
    }
    result.history.push_back(m);

    if (cfg.stop_at_val_acc > 0.0 && m.val_accuracy >= cfg.stop_at_val_acc)
      break;
    if (cfg.stop_at_test_acc > 0.0 && m.test_accuracy &&
        *m.test_accuracy >= cfg.stop_at_test_acc)
      break;
  }
  return result;
}

}  // namespace srnn
