#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace srnn {

// Binary T-by-C event matrix, row-major in time.
struct SpikeTrain {
  std::size_t T = 0;
  std::size_t C = 0;
  double dt = 1.0;  // ms per step
  std::vector<std::uint8_t> events;

  std::uint8_t at(std::size_t t, std::size_t c) const {
    return events[t * C + c];
  }
  std::size_t count() const;
};

// Real-valued multichannel signal with optional per-step class labels.
struct LabeledSignal {
  std::size_t T = 0;
  std::size_t C = 0;
  double sample_rate = 250.0;  // Hz
  std::vector<double> values;  // T*C row-major
  std::vector<int> labels;     // per-step, empty if unlabeled
};

enum class DecoderKind {
  spike_count,
  last_step,
  max_over_time,
  mean_readout,
  streaming_readout,
};

enum class TaskKind { sequence, streaming };

DecoderKind decoder_from_string(const std::string& s);
std::string to_string(DecoderKind k);

// Send-on-delta encoding: each input channel becomes an (up, down) pair of
// spike channels (columns 2c and 2c+1). The per-channel reference advances by
// `threshold` for every emitted event. Expects per-channel normalization to
// [0, 1].
SpikeTrain level_crossing_encode(const LabeledSignal& signal,
                                 double threshold = 0.3);

// Population rate coding: P neurons with Gaussian tuning curves centered
// evenly on [0, 1] (width 1/P) fire Bernoulli spikes with peak probability
// p_max. One input value per timestep.
SpikeTrain poisson_population_encode(const std::vector<double>& values,
                                     std::size_t population, std::uint64_t seed,
                                     double p_max = 0.5, double dt = 1.0);

struct TimedEvent {
  double t_seconds = 0.0;
  int channel = 0;
};

enum class BinMode { binary, count };

// 0/1 entries in binary mode, event counts otherwise.
struct BinnedMatrix {
  std::size_t T = 0;
  std::size_t C = 0;
  double bin_ms = 0.0;
  std::vector<double> data;
};

BinnedMatrix bin_events(const std::vector<TimedEvent>& events,
                        std::size_t channels, double bin_ms, double t_max_ms,
                        BinMode mode);

SpikeTrain to_spike_train(const BinnedMatrix& m);

// Decoded class scores. Sequence decoders produce one row of logits;
// streaming_readout produces per-step softmax probabilities (one row per
// timestep).
struct DecodeResult {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

// `readout` is the stored T-by-K readout potential trace; `output_spikes`
// (same layout) is required for spike_count and ignored otherwise.
DecodeResult decode(DecoderKind kind, std::size_t T, std::size_t K,
                    const std::vector<double>& readout,
                    const std::vector<double>* output_spikes = nullptr);

std::vector<double> softmax(const std::vector<double>& logits);

// ---- file formats -----------------------------------------------------------

// Spike-train archive: "SPKT", version, T, C, dt, bit-packed payload.
void save_spike_train(const std::string& path, const SpikeTrain& train);
SpikeTrain load_spike_train(const std::string& path);

// Event list: one `time_seconds,channel_index` line per event.
void save_event_csv(const std::string& path,
                    const std::vector<TimedEvent>& events);
std::vector<TimedEvent> load_event_csv(const std::string& path);

}  // namespace srnn
