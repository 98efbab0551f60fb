#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srnn/codec.hpp"

namespace srnn {

// How a stored sample turns into network input rows.
struct EncodingSpec {
  enum class Kind { none, level_crossing, population } kind = Kind::none;
  double threshold = 0.3;        // level crossing
  std::size_t population = 40;   // population coding
  double p_max = 0.5;
  std::uint64_t seed = 1;
};

struct Dataset {
  struct Sample {
    std::vector<double> values;  // raw payload, T * raw_channels row-major
    std::size_t T = 0;
    std::size_t raw_channels = 0;
    int label = -1;               // sequence tasks
    std::vector<int> step_labels; // streaming tasks
  };

  std::string name;
  TaskKind task_kind = TaskKind::sequence;
  int class_count = 0;
  std::size_t width = 0;  // network input width after encoding
  double dt = 1.0;        // ms per step
  EncodingSpec encoding;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }

  // Applies the encoding; `out` becomes T-by-width, row-major.
  void materialize(std::size_t index, std::vector<double>& out) const;
};

// IDX-format images (big-endian magic 0x803) and labels (0x801); pixels are
// scaled to [0,1] and flattened row-major into one sequence per image.
Dataset load_idx_images(const std::string& images_path,
                        const std::string& labels_path);

// Applies one fixed pixel permutation to every sample. Seed 0 is reserved
// for the identity.
Dataset permute_sequence(const Dataset& dataset, std::uint64_t seed);
std::vector<std::size_t> make_permutation(std::size_t n, std::uint64_t seed);

// Streaming ECG samples from `t,ch_a,ch_b,label` lines; labels are the six
// wave segments P, PQ, QR, RS, ST, TP. Signals are min-max normalized per
// channel. Blank lines separate samples.
Dataset load_labeled_signal_csv(const std::string& path);

extern const char* const kEcgLabelNames[6];

// Synthetic two-channel ECG-like waveforms with per-step segment labels;
// stands in for QTDB at desk scale.
Dataset synth_ecg_like(std::size_t n_samples, std::uint64_t seed,
                       std::size_t steps = 600);

// One event CSV per sample plus a `relative_path,label_index` manifest.
Dataset load_event_dataset(const std::string& events_dir, double bin_ms,
                           BinMode mode, std::size_t channels = 700,
                           double t_max_ms = 1000.0, int class_count = 20,
                           const std::string& manifest_name = "manifest.csv");

struct SplitResult {
  Dataset train;
  Dataset val;
};

// Label-stratified, seed-deterministic split; the validation part gets
// round(fraction * size) samples.
SplitResult split_validation(const Dataset& dataset, double fraction,
                             std::uint64_t seed);

Dataset subset(const Dataset& dataset, std::size_t count);

}  // namespace srnn
