#include "srnn/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace srnn {

NeuronKind neuron_kind_from_string(const std::string& s) {
  if (s == "lif") return NeuronKind::lif;
  if (s == "adaptive") return NeuronKind::adaptive;
  if (s == "relu") return NeuronKind::relu;
  throw std::invalid_argument("unknown neuron kind: " + s);
}

std::string to_string(NeuronKind k) {
  switch (k) {
    case NeuronKind::lif: return "lif";
    case NeuronKind::adaptive: return "adaptive";
    case NeuronKind::relu: return "relu";
  }
  return "?";
}

namespace {

NeuronParams base_params(const NetworkConfig& c) {
  NeuronParams p;
  p.b0 = c.b0;
  p.beta = c.beta;
  p.r_m = c.r_m;
  p.u_r = c.u_r;
  p.dt = c.dt;
  p.sigma = c.sigma;
  p.detach_reset = c.detach_reset;
  return p;
}

bool kind_has_adaptation(NeuronKind k) {
  return k == NeuronKind::adaptive || k == NeuronKind::relu;
}

}  // namespace

NeuronParams Network::layer_params(std::size_t l) const {
  NeuronParams p = base_params(config);
  p.tau_m = hidden[l].tau_m;
  p.tau_adp = hidden[l].tau_adp;
  return p;
}

NeuronParams Network::output_params() const {
  NeuronParams p = base_params(config);
  p.tau_m = out_tau_m;
  p.tau_adp = out_tau_adp;
  return p;
}

std::vector<std::pair<std::string, Tensor>> Network::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    const std::string prefix = "h" + std::to_string(l) + ".";
    out.push_back({prefix + "w_in", hidden[l].w_in});
    if (hidden[l].recurrent) out.push_back({prefix + "w_rec", hidden[l].w_rec});
    out.push_back({prefix + "tau_m", hidden[l].tau_m});
    if (hidden[l].tau_adp.defined())
      out.push_back({prefix + "tau_adp", hidden[l].tau_adp});
  }
  out.push_back({"out.w", w_out});
  out.push_back({"out.tau_m", out_tau_m});
  if (out_tau_adp.defined()) out.push_back({"out.tau_adp", out_tau_adp});
  return out;
}

std::vector<Tensor> Network::params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::vector<Tensor> Network::tau_params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params())
    if (name.find("tau") != std::string::npos) out.push_back(t);
  return out;
}

Network build(const NetworkConfig& config) {
  if (config.layer_widths.size() < 3)
    throw std::invalid_argument(
        "build: need at least input, one hidden and output widths");
  for (auto w : config.layer_widths)
    if (w == 0) throw std::invalid_argument("build: zero layer width");
  const std::size_t n_hidden = config.layer_widths.size() - 2;
  if (config.neuron_kinds.size() != n_hidden ||
      config.recurrent.size() != n_hidden)
    throw std::invalid_argument(
        "build: neuron_kinds/recurrent must match hidden layer count");
  if (config.sigma <= 0.0)
    throw std::invalid_argument("build: sigma must be > 0");

  std::mt19937_64 rng(config.seed);
  const double tau_floor = 0.1 * config.dt;

  auto uniform_weights = [&rng](std::size_t fan_in, std::size_t n) {
    const double lim = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-lim, lim);
    std::vector<double> w(fan_in * n);
    for (auto& v : w) v = dist(rng);
    return w;
  };
  auto normal_tau = [&rng, tau_floor](std::size_t n, double mean, double dev) {
    std::normal_distribution<double> dist(mean, dev);
    std::vector<double> tau(n);
    for (auto& v : tau) v = std::max(tau_floor, dist(rng));
    return tau;
  };

  Network net;
  net.config = config;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    Network::HiddenLayer layer;
    layer.kind = config.neuron_kinds[l];
    layer.recurrent = config.recurrent[l];
    layer.width = config.layer_widths[l + 1];
    const std::size_t fan_in = config.layer_widths[l];
    layer.w_in =
        Tensor::param({fan_in, layer.width}, uniform_weights(fan_in, layer.width));
    if (layer.recurrent)
      layer.w_rec = Tensor::param({layer.width, layer.width},
                                  uniform_weights(layer.width, layer.width));
    layer.tau_m =
        Tensor::param({layer.width}, normal_tau(layer.width, 20.0, 5.0));
    if (kind_has_adaptation(layer.kind))
      layer.tau_adp =
          Tensor::param({layer.width}, normal_tau(layer.width, 200.0, 50.0));
    net.hidden.push_back(std::move(layer));
  }

  const std::size_t last = config.layer_widths[config.layer_widths.size() - 2];
  const std::size_t classes = config.layer_widths.back();
  net.w_out = Tensor::param({last, classes}, uniform_weights(last, classes));
  net.out_tau_m = Tensor::param({classes}, normal_tau(classes, 20.0, 5.0));
  if (net.spiking_output() && kind_has_adaptation(net.output_kind()))
    net.out_tau_adp =
        Tensor::param({classes}, normal_tau(classes, 200.0, 50.0));
  return net;
}

// ---- batches ----------------------------------------------------------------

Tensor BatchInput::step(std::size_t t) const {
  std::vector<double> slab(data.begin() + t * B * C,
                           data.begin() + (t + 1) * B * C);
  return Tensor::from({B, C}, std::move(slab));
}

BatchInput make_batch(const Dataset& dataset,
                      const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  BatchInput batch;
  batch.B = indices.size();
  batch.C = dataset.width;

  std::vector<double> sample;
  for (std::size_t bi = 0; bi < indices.size(); ++bi) {
    const auto& s = dataset.samples.at(indices[bi]);
    dataset.materialize(indices[bi], sample);
    if (bi == 0) {
      batch.T = s.T;
      batch.data.assign(batch.T * batch.B * batch.C, 0.0);
      if (dataset.task_kind == TaskKind::streaming)
        batch.step_targets.assign(batch.T, std::vector<int>(batch.B, 0));
    }
    if (s.T != batch.T)
      throw std::invalid_argument("make_batch: ragged sample lengths");
    if (sample.size() != batch.T * batch.C)
      throw std::invalid_argument("make_batch: sample width mismatch");
    for (std::size_t t = 0; t < batch.T; ++t)
      std::memcpy(&batch.data[(t * batch.B + bi) * batch.C],
                  &sample[t * batch.C], batch.C * sizeof(double));
    if (dataset.task_kind == TaskKind::sequence) {
      batch.seq_targets.push_back(s.label);
    } else {
      for (std::size_t t = 0; t < batch.T; ++t)
        batch.step_targets[t][bi] = s.step_labels.at(t);
    }
  }
  return batch;
}

// ---- forward ------------------------------------------------------------------

namespace {

StepOut run_cell(NeuronKind kind, const LayerState& state, const Tensor& current,
                 const NeuronParams& p, const CellCoeffs& c) {
  switch (kind) {
    case NeuronKind::lif: return lif_step(state, current, p, c);
    case NeuronKind::adaptive: return adaptive_step(state, current, p, c);
    case NeuronKind::relu: return relu_step(state, current, p, c);
  }
  throw std::logic_error("unknown neuron kind");
}

double value_sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.value()) s += v;
  return s;
}

}  // namespace

ForwardResult forward(const Network& net, const BatchInput& input,
                      const ForwardOptions& opts) {
  if (input.C != net.input_width())
    throw std::invalid_argument(
        "forward: input width " + std::to_string(input.C) +
        " does not match network input " + std::to_string(net.input_width()));

  const std::size_t B = input.B;
  std::mt19937_64* rng =
      net.config.zero_init_membrane ? nullptr : opts.membrane_rng;

  // Per-unroll decay coefficients; tau gradients flow through these nodes.
  std::vector<NeuronParams> params;
  std::vector<CellCoeffs> coeffs;
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    params.push_back(net.layer_params(l));
    coeffs.push_back(make_coeffs(params.back()));
  }
  NeuronParams out_params = net.output_params();
  CellCoeffs out_coeffs = make_coeffs(out_params);

  ForwardResult res;
  res.T = input.T;
  res.B = B;
  res.hidden_spike_sums.assign(net.hidden.size(), 0.0);
  if (opts.record_spikes) res.record.resize(net.hidden.size());

  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    res.hidden_states.push_back(make_state(
        B, net.hidden[l].width, kind_has_adaptation(net.hidden[l].kind), rng));
  }
  const bool spiking_out = net.spiking_output();
  res.out_state = make_state(B, net.output_width(),
                             kind_has_adaptation(net.output_kind()),
                             spiking_out ? rng : nullptr);

  res.readout_steps.reserve(input.T);
  if (spiking_out) res.out_spike_steps.reserve(input.T);

  for (std::size_t t = 0; t < input.T; ++t) {
    Tensor x = input.step(t);
    for (std::size_t l = 0; l < net.hidden.size(); ++l) {
      Tensor current = matmul(x, net.hidden[l].w_in);
      if (net.hidden[l].recurrent)
        current = add(current, matmul(res.hidden_states[l].s,
                                      net.hidden[l].w_rec));
      StepOut step = run_cell(net.hidden[l].kind, res.hidden_states[l],
                              current, params[l], coeffs[l]);
      res.hidden_states[l] = step.state;
      x = step.out;
      res.hidden_spike_sums[l] += value_sum(step.out);
      if (opts.record_spikes)
        res.record[l].insert(res.record[l].end(), step.out.value().begin(),
                             step.out.value().end());
    }
    Tensor x_out = matmul(x, net.w_out);
    if (spiking_out) {
      StepOut step = run_cell(net.output_kind(), res.out_state, x_out,
                              out_params, out_coeffs);
      res.out_state = step.state;
      res.out_spike_steps.push_back(step.out);
      res.out_spike_sum += value_sum(step.out);
      res.readout_steps.push_back(step.state.u);
    } else {
      res.out_state = readout_step(res.out_state, x_out, out_params, out_coeffs);
      res.readout_steps.push_back(res.out_state.u);
    }
  }
  return res;
}

std::vector<double> ForwardResult::concat_record(const Network& net) const {
  if (record.empty())
    throw std::invalid_argument("concat_record: spikes were not recorded");
  std::size_t total_width = 0;
  for (const auto& l : net.hidden) total_width += l.width;
  std::vector<double> out;
  out.reserve(T * B * total_width);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t l = 0; l < record.size(); ++l) {
        const std::size_t w = net.hidden[l].width;
        const double* src = &record[l][(t * B + b) * w];
        out.insert(out.end(), src, src + w);
      }
  return out;
}

std::vector<double> ForwardResult::readout_trace(std::size_t b) const {
  const std::size_t K = readout_steps.front().cols();
  std::vector<double> out(T * K);
  for (std::size_t t = 0; t < T; ++t)
    std::memcpy(&out[t * K], &readout_steps[t].value()[b * K],
                K * sizeof(double));
  return out;
}

std::vector<double> ForwardResult::out_spike_trace(std::size_t b) const {
  if (out_spike_steps.empty())
    throw std::invalid_argument("out_spike_trace: output layer is non-spiking");
  const std::size_t K = out_spike_steps.front().cols();
  std::vector<double> out(T * K);
  for (std::size_t t = 0; t < T; ++t)
    std::memcpy(&out[t * K], &out_spike_steps[t].value()[b * K],
                K * sizeof(double));
  return out;
}

// ---- loss ---------------------------------------------------------------------

LossResult unroll_loss(const Network& net, const BatchInput& input,
                       TaskKind task, const ForwardOptions& opts) {
  const DecoderKind decoder = net.config.decoder;
  if (task == TaskKind::streaming &&
      decoder != DecoderKind::streaming_readout)
    throw std::invalid_argument("unroll_loss: streaming tasks decode from the "
                                "per-step readout (got " +
                                to_string(decoder) + ")");
  if (task == TaskKind::sequence && decoder == DecoderKind::streaming_readout)
    throw std::invalid_argument(
        "unroll_loss: streaming_readout requires a streaming task");

  LossResult res;
  res.fwd = forward(net, input, opts);
  const std::size_t T = res.fwd.T;

  if (task == TaskKind::streaming) {
    if (input.step_targets.size() != T)
      throw std::invalid_argument("unroll_loss: missing per-step targets");
    Tensor acc;
    for (std::size_t t = 0; t < T; ++t) {
      Tensor lt =
          softmax_cross_entropy(res.fwd.readout_steps[t], input.step_targets[t]);
      acc = t == 0 ? lt : add(acc, lt);
    }
    res.loss = scalar_mul(acc, 1.0 / static_cast<double>(T));
    return res;
  }

  if (input.seq_targets.size() != input.B)
    throw std::invalid_argument("unroll_loss: missing sequence targets");

  Tensor logits;
  switch (decoder) {
    case DecoderKind::spike_count: {
      for (std::size_t t = 0; t < T; ++t)
        logits = t == 0 ? res.fwd.out_spike_steps[t]
                        : add(logits, res.fwd.out_spike_steps[t]);
      break;
    }
    case DecoderKind::last_step:
      logits = res.fwd.readout_steps.back();
      break;
    case DecoderKind::max_over_time: {
      for (std::size_t t = 0; t < T; ++t)
        logits = t == 0 ? res.fwd.readout_steps[t]
                        : maximum(logits, res.fwd.readout_steps[t]);
      break;
    }
    case DecoderKind::mean_readout: {
      for (std::size_t t = 0; t < T; ++t)
        logits = t == 0 ? res.fwd.readout_steps[t]
                        : add(logits, res.fwd.readout_steps[t]);
      logits = scalar_mul(logits, 1.0 / static_cast<double>(T));
      break;
    }
    case DecoderKind::streaming_readout:
      throw std::logic_error("unreachable");
  }
  res.loss = softmax_cross_entropy(logits, input.seq_targets);
  return res;
}

// ---- checkpoints ----------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'S', 'R', 'N', 'N', 'C', 'K', 'P', 'T'};

}  // namespace

void Network::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kCkptMagic, 8);
  const std::uint32_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), 4);
  const auto named = named_params();
  const auto count = static_cast<std::uint32_t>(named.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& [name, tensor] : named) {
    const auto len = static_cast<std::uint32_t>(name.size());
    os.write(reinterpret_cast<const char*>(&len), 4);
    os.write(name.data(), len);
    const auto rank = static_cast<std::uint32_t>(tensor.shape().size());
    os.write(reinterpret_cast<const char*>(&rank), 4);
    for (auto d : tensor.shape()) {
      const auto d64 = static_cast<std::uint64_t>(d);
      os.write(reinterpret_cast<const char*>(&d64), 8);
    }
    os.write(reinterpret_cast<const char*>(tensor.value().data()),
             static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  }
}

void Network::load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("not a network checkpoint: " + path);
  std::uint32_t version = 0, count = 0;
  is.read(reinterpret_cast<char*>(&version), 4);
  is.read(reinterpret_cast<char*>(&count), 4);
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  auto named = named_params();
  if (count != named.size())
    throw std::runtime_error("checkpoint has " + std::to_string(count) +
                             " tensors, network expects " +
                             std::to_string(named.size()));
  for (auto& [name, tensor] : named) {
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), 4);
    std::string got(len, '\0');
    is.read(got.data(), len);
    if (got != name)
      throw std::runtime_error("checkpoint tensor `" + got +
                               "` does not match expected `" + name + "`");
    std::uint32_t rank = 0;
    is.read(reinterpret_cast<char*>(&rank), 4);
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint64_t d64 = 0;
      is.read(reinterpret_cast<char*>(&d64), 8);
      d = static_cast<std::size_t>(d64);
    }
    if (shape != tensor.shape())
      throw std::runtime_error("checkpoint tensor `" + name + "` has shape " +
                               shape_str(shape) + ", expected " +
                               shape_str(tensor.shape()));
    is.read(reinterpret_cast<char*>(tensor.value().data()),
            static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
  }
}

void Network::copy_values_from(const Network& other) {
  auto dst = named_params();
  auto src = other.named_params();
  if (dst.size() != src.size())
    throw std::invalid_argument("copy_values_from: structure mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i].second.value() = src[i].second.value();
}

}  // namespace srnn
