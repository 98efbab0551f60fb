#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "srnn/codec.hpp"
#include "srnn/data.hpp"
#include "srnn/neurons.hpp"

namespace srnn {

enum class NeuronKind { lif, adaptive, relu };

NeuronKind neuron_kind_from_string(const std::string& s);
std::string to_string(NeuronKind k);

struct NetworkConfig {
  std::vector<std::size_t> layer_widths;  // input, hidden..., output
  std::vector<NeuronKind> neuron_kinds;   // one per hidden layer
  std::vector<bool> recurrent;            // one per hidden layer
  DecoderKind decoder = DecoderKind::spike_count;
  double dt = 1.0;
  double sigma = 0.5;
  double b0 = 1.0;
  double beta = 1.8;
  double r_m = 1.0;
  double u_r = 0.0;
  bool detach_reset = false;
  bool zero_init_membrane = false;
  std::uint64_t seed = 1;
};

// Fig. 3a topology: fully connected forward weights between layers, full
// recurrence within a layer, and a non-spiking readout integrator on top.
// With spike_count decoding the output layer is instead a spiking cell of the
// last hidden layer's kind, whose per-class spike totals form the logits.
struct Network {
  struct HiddenLayer {
    NeuronKind kind = NeuronKind::adaptive;
    bool recurrent = true;
    std::size_t width = 0;
    Tensor w_in;   // [fan_in, width]
    Tensor w_rec;  // [width, width], defined iff recurrent
    Tensor tau_m;
    Tensor tau_adp;  // adaptive / relu kinds
  };

  NetworkConfig config;
  std::vector<HiddenLayer> hidden;
  Tensor w_out;  // [last_hidden, classes]
  Tensor out_tau_m;
  Tensor out_tau_adp;  // spiking adaptive/relu output only

  std::size_t input_width() const { return config.layer_widths.front(); }
  std::size_t output_width() const { return config.layer_widths.back(); }
  bool spiking_output() const {
    return config.decoder == DecoderKind::spike_count;
  }
  NeuronKind output_kind() const {
    return spiking_output() ? hidden.back().kind : NeuronKind::adaptive;
  }

  NeuronParams layer_params(std::size_t l) const;
  NeuronParams output_params() const;

  // Every trainable tensor exactly once, in checkpoint order.
  std::vector<std::pair<std::string, Tensor>> named_params() const;
  std::vector<Tensor> params() const;
  std::vector<Tensor> tau_params() const;

  void save(const std::string& path) const;
  void load_weights(const std::string& path);
  void copy_values_from(const Network& other);
};

Network build(const NetworkConfig& config);

// Time-major batch: data[t*B*C + b*C + c].
struct BatchInput {
  std::size_t T = 0, B = 0, C = 0;
  std::vector<double> data;
  std::vector<int> seq_targets;                // sequence tasks, length B
  std::vector<std::vector<int>> step_targets;  // streaming, T entries of B

  Tensor step(std::size_t t) const;
};

BatchInput make_batch(const Dataset& dataset,
                      const std::vector<std::size_t>& indices);

struct ForwardOptions {
  bool record_spikes = false;
  std::mt19937_64* membrane_rng = nullptr;  // null -> zero init
};

struct ForwardResult {
  std::size_t T = 0, B = 0;
  std::vector<Tensor> readout_steps;    // per-step [B,K] membrane potentials
  std::vector<Tensor> out_spike_steps;  // spiking output only
  std::vector<LayerState> hidden_states;
  LayerState out_state;
  std::vector<double> hidden_spike_sums;      // per layer, over all steps
  double out_spike_sum = 0.0;
  std::vector<std::vector<double>> record;    // per layer T*B*width spikes

  // T x (sum of hidden widths) spike record for single-sample runs.
  std::vector<double> concat_record(const Network& net) const;
  // Per-sample T-by-K readout trace (plain values).
  std::vector<double> readout_trace(std::size_t b) const;
  std::vector<double> out_spike_trace(std::size_t b) const;
};

ForwardResult forward(const Network& net, const BatchInput& input,
                      const ForwardOptions& opts = {});

struct LossResult {
  Tensor loss;
  ForwardResult fwd;
};

LossResult unroll_loss(const Network& net, const BatchInput& input,
                       TaskKind task, const ForwardOptions& opts = {});

}  // namespace srnn
