#include "srnn/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace srnn {

std::size_t SpikeTrain::count() const {
  std::size_t n = 0;
  for (auto e : events) n += e;
  return n;
}

DecoderKind decoder_from_string(const std::string& s) {
  if (s == "spike_count") return DecoderKind::spike_count;
  if (s == "last_step") return DecoderKind::last_step;
  if (s == "max_over_time") return DecoderKind::max_over_time;
  if (s == "mean_readout") return DecoderKind::mean_readout;
  if (s == "streaming_readout") return DecoderKind::streaming_readout;
  throw std::invalid_argument("unknown decoder kind: " + s);
}

std::string to_string(DecoderKind k) {
  switch (k) {
    case DecoderKind::spike_count: return "spike_count";
    case DecoderKind::last_step: return "last_step";
    case DecoderKind::max_over_time: return "max_over_time";
    case DecoderKind::mean_readout: return "mean_readout";
    case DecoderKind::streaming_readout: return "streaming_readout";
  }
  return "?";
}

SpikeTrain level_crossing_encode(const LabeledSignal& signal,
                                 double threshold) {
  if (threshold <= 0.0)
    throw std::invalid_argument("level_crossing_encode: threshold must be > 0");
  for (double v : signal.values)
    if (v < -0.01 || v > 1.01)
      throw std::invalid_argument(
          "level_crossing_encode: signal not normalized to [0,1], found " +
          std::to_string(v));

  SpikeTrain out;
  out.T = signal.T;
  out.C = 2 * signal.C;
  out.dt = 1000.0 / signal.sample_rate;
  out.events.assign(out.T * out.C, 0);

  std::vector<double> ref(signal.C);
  for (std::size_t c = 0; c < signal.C; ++c) ref[c] = signal.values[c];

  for (std::size_t t = 0; t < signal.T; ++t) {
    for (std::size_t c = 0; c < signal.C; ++c) {
      const double v = signal.values[t * signal.C + c];
      if (v >= ref[c] + threshold) {
        out.events[t * out.C + 2 * c] = 1;
        while (v >= ref[c] + threshold) ref[c] += threshold;
      } else if (v <= ref[c] - threshold) {
        out.events[t * out.C + 2 * c + 1] = 1;
        while (v <= ref[c] - threshold) ref[c] -= threshold;
      }
    }
  }
  return out;
}

SpikeTrain poisson_population_encode(const std::vector<double>& values,
                                     std::size_t population,
                                     std::uint64_t seed, double p_max,
                                     double dt) {
  if (population < 2)
    throw std::invalid_argument(
        "poisson_population_encode: population must be >= 2");
  for (double v : values)
    if (v < 0.0 || v > 1.0)
      throw std::invalid_argument(
          "poisson_population_encode: value " + std::to_string(v) +
          " outside [0,1]");

  const double width = 1.0 / static_cast<double>(population);
  std::vector<double> centers(population);
  for (std::size_t i = 0; i < population; ++i)
    centers[i] = static_cast<double>(i) / static_cast<double>(population - 1);

  SpikeTrain out;
  out.T = values.size();
  out.C = population;
  out.dt = dt;
  out.events.assign(out.T * out.C, 0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < out.T; ++t) {
    const double v = values[t];
    for (std::size_t i = 0; i < population; ++i) {
      const double d = v - centers[i];
      const double p = p_max * std::exp(-d * d / (2.0 * width * width));
      if (unit(rng) < p) out.events[t * out.C + i] = 1;
    }
  }
  return out;
}

BinnedMatrix bin_events(const std::vector<TimedEvent>& events,
                        std::size_t channels, double bin_ms, double t_max_ms,
                        BinMode mode) {
  if (bin_ms <= 0.0 || t_max_ms <= 0.0)
    throw std::invalid_argument("bin_events: bin_ms and t_max_ms must be > 0");
  BinnedMatrix out;
  out.T = static_cast<std::size_t>(std::llround(t_max_ms / bin_ms));
  out.C = channels;
  out.bin_ms = bin_ms;
  out.data.assign(out.T * out.C, 0.0);

  for (const auto& e : events) {
    if (e.t_seconds < 0.0)
      throw std::invalid_argument("bin_events: negative event time " +
                                  std::to_string(e.t_seconds));
    if (e.channel < 0 || static_cast<std::size_t>(e.channel) >= channels)
      throw std::invalid_argument("bin_events: channel " +
                                  std::to_string(e.channel) +
                                  " out of range");
    const double t_ms = e.t_seconds * 1000.0;
    const auto bin = static_cast<std::size_t>(t_ms / bin_ms);
    if (bin >= out.T) continue;  // tail-truncate
    out.data[bin * out.C + e.channel] += 1.0;
  }
  if (mode == BinMode::binary)
    for (auto& v : out.data) v = v > 0.0 ? 1.0 : 0.0;
  return out;
}

SpikeTrain to_spike_train(const BinnedMatrix& m) {
  SpikeTrain out;
  out.T = m.T;
  out.C = m.C;
  out.dt = m.bin_ms;
  out.events.resize(m.data.size());
  for (std::size_t i = 0; i < m.data.size(); ++i)
    out.events[i] = m.data[i] > 0.0 ? 1 : 0;
  return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (auto& v : out) v /= z;
  return out;
}

DecodeResult decode(DecoderKind kind, std::size_t T, std::size_t K,
                    const std::vector<double>& readout,
                    const std::vector<double>* output_spikes) {
  if (T == 0 || K == 0)
    throw std::invalid_argument("decode: empty trace");
  DecodeResult res;
  switch (kind) {
    case DecoderKind::spike_count: {
      if (!output_spikes || output_spikes->size() != T * K)
        throw std::invalid_argument(
            "decode: spike_count requires a T-by-K output spike record");
      res.rows = 1;
      res.cols = K;
      res.data.assign(K, 0.0);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k)
          res.data[k] += (*output_spikes)[t * K + k];
      return res;
    }
    case DecoderKind::last_step:
      res.rows = 1;
      res.cols = K;
      res.data.assign(readout.begin() + (T - 1) * K, readout.end());
      return res;
    case DecoderKind::max_over_time: {
      res.rows = 1;
      res.cols = K;
      res.data.assign(readout.begin(), readout.begin() + K);
      for (std::size_t t = 1; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k)
          res.data[k] = std::max(res.data[k], readout[t * K + k]);
      return res;
    }
    case DecoderKind::mean_readout: {
      res.rows = 1;
      res.cols = K;
      res.data.assign(K, 0.0);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) res.data[k] += readout[t * K + k];
      for (auto& v : res.data) v /= static_cast<double>(T);
      return res;
    }
    case DecoderKind::streaming_readout: {
      res.rows = T;
      res.cols = K;
      res.data.resize(T * K);
      for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> row(readout.begin() + t * K,
                                readout.begin() + (t + 1) * K);
        auto p = softmax(row);
        std::copy(p.begin(), p.end(), res.data.begin() + t * K);
      }
      return res;
    }
  }
  throw std::invalid_argument("decode: unknown decoder kind");
}

// ---- file formats -----------------------------------------------------------

namespace {

constexpr char kSpikeMagic[4] = {'S', 'P', 'K', 'T'};

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("truncated spike archive: " + path);
  return v;
}

}  // namespace

void save_spike_train(const std::string& path, const SpikeTrain& train) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kSpikeMagic, 4);
  write_pod<std::uint32_t>(os, 1);  // version
  write_pod<std::uint64_t>(os, train.T);
  write_pod<std::uint64_t>(os, train.C);
  write_pod<double>(os, train.dt);
  const std::size_t nbits = train.T * train.C;
  std::vector<std::uint8_t> packed((nbits + 7) / 8, 0);
  for (std::size_t i = 0; i < nbits; ++i)
    if (train.events[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  os.write(reinterpret_cast<const char*>(packed.data()),
           static_cast<std::streamsize>(packed.size()));
}

SpikeTrain load_spike_train(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kSpikeMagic, 4) != 0)
    throw std::runtime_error("not a spike-train archive: " + path);
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != 1)
    throw std::runtime_error("unsupported spike archive version " +
                             std::to_string(version));
  SpikeTrain train;
  train.T = read_pod<std::uint64_t>(is, path);
  train.C = read_pod<std::uint64_t>(is, path);
  train.dt = read_pod<double>(is, path);
  const std::size_t nbits = train.T * train.C;
  std::vector<std::uint8_t> packed((nbits + 7) / 8);
  is.read(reinterpret_cast<char*>(packed.data()),
          static_cast<std::streamsize>(packed.size()));
  if (!is) throw std::runtime_error("truncated spike archive: " + path);
  train.events.resize(nbits);
  for (std::size_t i = 0; i < nbits; ++i)
    train.events[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return train;
}

void save_event_csv(const std::string& path,
                    const std::vector<TimedEvent>& events) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(9);
  for (const auto& e : events) os << e.t_seconds << ',' << e.channel << '\n';
}

std::vector<TimedEvent> load_event_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<TimedEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TimedEvent e;
    char comma = 0;
    if (!(ls >> e.t_seconds >> comma >> e.channel) || comma != ',')
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected `time_seconds,channel`");
    events.push_back(e);
  }
  return events;
}

}  // namespace srnn
