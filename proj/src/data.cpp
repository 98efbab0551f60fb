#include "srnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace srnn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint32_t read_be32(std::ifstream& is, const std::string& path,
                        std::size_t offset) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is)
    throw std::runtime_error(path + ": truncated at offset " +
                             std::to_string(offset));
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

void Dataset::materialize(std::size_t index, std::vector<double>& out) const {
  const Sample& s = samples.at(index);
  switch (encoding.kind) {
    case EncodingSpec::Kind::none:
      out.assign(s.values.begin(), s.values.end());
      return;
    case EncodingSpec::Kind::level_crossing: {
      LabeledSignal sig;
      sig.T = s.T;
      sig.C = s.raw_channels;
      sig.sample_rate = 1000.0 / dt;
      sig.values = s.values;
      SpikeTrain train = level_crossing_encode(sig, encoding.threshold);
      out.assign(train.events.begin(), train.events.end());
      return;
    }
    case EncodingSpec::Kind::population: {
      if (s.raw_channels != 1)
        throw std::invalid_argument(
            "population encoding expects single-channel sequences");
      SpikeTrain train = poisson_population_encode(
          s.values, encoding.population,
          splitmix64(encoding.seed ^ splitmix64(index)), encoding.p_max, dt);
      out.assign(train.events.begin(), train.events.end());
      return;
    }
  }
  throw std::logic_error("unknown encoding kind");
}

// ---- IDX -------------------------------------------------------------------

Dataset load_idx_images(const std::string& images_path,
                        const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw std::runtime_error("cannot read " + images_path);
  const auto img_magic = read_be32(imgs, images_path, 0);
  if (img_magic != 0x00000803)
    throw std::runtime_error(images_path + ": bad magic at offset 0 (got 0x" +
                             [&] {
                               std::ostringstream os;
                               os << std::hex << img_magic;
                               return os.str();
                             }() +
                             ", want 0x803)");
  const auto count = read_be32(imgs, images_path, 4);
  const auto rows = read_be32(imgs, images_path, 8);
  const auto cols = read_be32(imgs, images_path, 12);

  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw std::runtime_error("cannot read " + labels_path);
  const auto lab_magic = read_be32(labs, labels_path, 0);
  if (lab_magic != 0x00000801)
    throw std::runtime_error(labels_path + ": bad magic at offset 0");
  const auto lab_count = read_be32(labs, labels_path, 4);
  if (lab_count != count)
    throw std::runtime_error("image/label count mismatch: " +
                             std::to_string(count) + " images vs " +
                             std::to_string(lab_count) + " labels");

  const std::size_t pixels = std::size_t(rows) * cols;
  Dataset ds;
  ds.name = "idx_images";
  ds.task_kind = TaskKind::sequence;
  ds.class_count = 10;
  ds.width = 1;  // raw; typically re-encoded by population coding
  ds.dt = 1.0;
  ds.samples.reserve(count);

  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < count; ++i) {
    imgs.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(pixels));
    if (!imgs)
      throw std::runtime_error(images_path + ": truncated at offset " +
                               std::to_string(16 + std::size_t(i) * pixels));
    int lab = labs.get();
    if (lab == EOF)
      throw std::runtime_error(labels_path + ": truncated at offset " +
                               std::to_string(8 + i));
    Dataset::Sample s;
    s.T = pixels;
    s.raw_channels = 1;
    s.label = lab;
    s.values.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) s.values[p] = buf[p] / 255.0;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<std::size_t> make_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  return perm;
}

Dataset permute_sequence(const Dataset& dataset, std::uint64_t seed) {
  if (dataset.samples.empty()) return dataset;
  const std::size_t n = dataset.samples.front().T;
  for (const auto& s : dataset.samples)
    if (s.T != n || s.raw_channels != 1)
      throw std::invalid_argument(
          "permute_sequence: requires equal-length single-channel sequences");
  const auto perm = make_permutation(n, seed);
  Dataset out = dataset;
  out.name += "_perm";
  for (auto& s : out.samples) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = s.values[perm[i]];
    s.values = std::move(v);
  }
  return out;
}

// ---- labeled signal CSV ------------------------------------------------------

const char* const kEcgLabelNames[6] = {"P", "PQ", "QR", "RS", "ST", "TP"};

namespace {

int ecg_label_index(const std::string& token) {
  for (int i = 0; i < 6; ++i)
    if (token == kEcgLabelNames[i]) return i;
  return -1;
}

void normalize_channels(Dataset::Sample& s) {
  for (std::size_t c = 0; c < s.raw_channels; ++c) {
    double lo = s.values[c], hi = s.values[c];
    for (std::size_t t = 0; t < s.T; ++t) {
      lo = std::min(lo, s.values[t * s.raw_channels + c]);
      hi = std::max(hi, s.values[t * s.raw_channels + c]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t t = 0; t < s.T; ++t) {
      auto& v = s.values[t * s.raw_channels + c];
      v = (v - lo) / span;
    }
  }
}

}  // namespace

Dataset load_labeled_signal_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);

  Dataset ds;
  ds.name = "labeled_signal";
  ds.task_kind = TaskKind::streaming;
  ds.class_count = 6;
  ds.dt = 4.0;  // 250 Hz
  ds.encoding.kind = EncodingSpec::Kind::level_crossing;

  Dataset::Sample cur;
  cur.raw_channels = 2;
  auto flush = [&] {
    if (cur.T == 0) return;
    normalize_channels(cur);
    ds.samples.push_back(std::move(cur));
    cur = Dataset::Sample{};
    cur.raw_channels = 2;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) {
      flush();
      continue;
    }
    std::istringstream ls(line);
    std::string t_str, a_str, b_str, label;
    if (!std::getline(ls, t_str, ',') || !std::getline(ls, a_str, ',') ||
        !std::getline(ls, b_str, ',') || !std::getline(ls, label))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected `t,ch_a,ch_b,label`");
    const int lab = ecg_label_index(label);
    if (lab < 0)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown label token `" + label + "`");
    cur.values.push_back(std::stod(a_str));
    cur.values.push_back(std::stod(b_str));
    cur.step_labels.push_back(lab);
    ++cur.T;
  }
  flush();
  if (ds.samples.empty())
    throw std::runtime_error(path + ": no samples found");
  ds.width = 4;  // two channels, up/down events each
  return ds;
}

// ---- synthetic ECG -----------------------------------------------------------

namespace {

struct SegmentPlan {
  int label;
  std::size_t steps;
};

// Writes one wave segment into ch(a,b); shapes are simple half-sine bumps
// and linear ramps, amplitude-jittered per beat.
void render_segment(int label, std::size_t steps, double amp_jitter,
                    std::vector<double>& a, std::vector<double>& b) {
  auto bump = [steps](std::size_t i, double amp) {
    const double x = (static_cast<double>(i) + 0.5) / steps;
    return amp * std::sin(M_PI * x);
  };
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / steps;
    double va = 0.0, vb = 0.0;
    switch (label) {
      case 0:  // P wave
        va = bump(i, 0.72 * amp_jitter);
        vb = bump(i, 0.62 * amp_jitter);
        break;
      case 1:  // PQ: flat
        break;
      case 2:  // QR: dip then sharp rise to the R peak
        va = -0.08 + (1.0 * amp_jitter + 0.08) * x;
        vb = -0.05 + (0.72 * amp_jitter + 0.05) * x;
        break;
      case 3:  // RS: sharp fall past baseline to the S trough
        va = 1.0 * amp_jitter - (1.0 * amp_jitter + 0.40) * x;
        vb = 0.72 * amp_jitter - (0.72 * amp_jitter + 0.24) * x;
        break;
      case 4:  // ST: recover from S and trace the T wave
        va = -0.40 * (1.0 - x) + bump(i, 0.80 * amp_jitter);
        vb = -0.24 * (1.0 - x) + bump(i, 0.78 * amp_jitter);
        break;
      case 5:  // TP: baseline
        break;
    }
    a.push_back(va);
    b.push_back(vb);
  }
}

}  // namespace

Dataset synth_ecg_like(std::size_t n_samples, std::uint64_t seed,
                       std::size_t steps) {
  Dataset ds;
  ds.name = "ecg_synth";
  ds.task_kind = TaskKind::streaming;
  ds.class_count = 6;
  ds.width = 4;
  ds.dt = 4.0;
  ds.encoding.kind = EncodingSpec::Kind::level_crossing;
  ds.encoding.threshold = 0.3;

  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> noise(0.0, 0.012);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double mean_steps[6] = {22, 11, 6, 6, 28, 45};
  const double dev_steps[6] = {3.5, 2.2, 1.2, 1.2, 4, 13};

  for (std::size_t si = 0; si < n_samples; ++si) {
    std::vector<double> a, b;
    std::vector<int> labels;
    // Random phase: drop a prefix of the first beat.
    const std::size_t skip = static_cast<std::size_t>(unit(rng) * 80.0);
    while (a.size() < steps + skip) {
      const double amp = 0.85 + 0.3 * unit(rng);
      for (int seg = 0; seg < 6; ++seg) {
        std::normal_distribution<double> d(mean_steps[seg], dev_steps[seg]);
        const auto n = static_cast<std::size_t>(
            std::max(3.0, std::round(d(rng))));
        render_segment(seg, n, amp, a, b);
        labels.insert(labels.end(), n, seg);
      }
    }

    // Slow baseline wander, as in ambulatory recordings.
    const double wander_amp = 0.72 + 0.22 * unit(rng);
    const double wander_period = 15.0 + 12.0 * unit(rng);
    const double wander_phase = 2.0 * M_PI * unit(rng);

    Dataset::Sample s;
    s.T = steps;
    s.raw_channels = 2;
    s.values.resize(steps * 2);
    s.step_labels.assign(labels.begin() + skip, labels.begin() + skip + steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const double w =
          wander_amp *
          std::sin(2.0 * M_PI * static_cast<double>(t) / wander_period +
                   wander_phase);
      s.values[t * 2 + 0] = a[skip + t] + w + noise(rng);
      s.values[t * 2 + 1] = b[skip + t] + 0.8 * w + noise(rng);
    }
    normalize_channels(s);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ---- event dataset -----------------------------------------------------------

Dataset load_event_dataset(const std::string& events_dir, double bin_ms,
                           BinMode mode, std::size_t channels, double t_max_ms,
                           int class_count, const std::string& manifest_name) {
  namespace fs = std::filesystem;
  const fs::path dir(events_dir);
  const fs::path manifest = dir / manifest_name;
  std::ifstream is(manifest);
  if (!is) throw std::runtime_error("cannot read " + manifest.string());

  Dataset ds;
  ds.name = "events";
  ds.task_kind = TaskKind::sequence;
  ds.class_count = class_count;
  ds.dt = bin_ms;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw std::runtime_error(manifest.string() + ":" +
                               std::to_string(lineno) +
                               ": expected `relative_path,label_index`");
    const std::string rel = line.substr(0, comma);
    const int label = std::stoi(line.substr(comma + 1));
    if (label < 0 || label >= class_count)
      throw std::runtime_error(manifest.string() + ":" +
                               std::to_string(lineno) + ": label " +
                               std::to_string(label) + " out of range");
    const fs::path sample_path = dir / rel;
    if (!fs::exists(sample_path))
      throw std::runtime_error(manifest.string() + ":" +
                               std::to_string(lineno) + ": missing sample " +
                               sample_path.string());
    const auto events = load_event_csv(sample_path.string());
    BinnedMatrix m = bin_events(events, channels, bin_ms, t_max_ms, mode);

    Dataset::Sample s;
    s.T = m.T;
    s.raw_channels = m.C;
    s.label = label;
    s.values = std::move(m.data);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty())
    throw std::runtime_error(manifest.string() + ": empty manifest");
  ds.width = channels;
  return ds;
}

// ---- splits ------------------------------------------------------------------

SplitResult split_validation(const Dataset& dataset, double fraction,
                             std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw std::invalid_argument("split_validation: fraction must be in (0,1)");
  const std::size_t n = dataset.size();
  const auto target =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  // Group per class, shuffle within groups, then take floor(fraction*count)
  // from each and top up by largest remainder until the target is met.
  const int classes = std::max(dataset.class_count, 1);
  std::vector<std::vector<std::size_t>> per_class(classes);
  for (std::size_t i = 0; i < n; ++i) {
    int label = dataset.samples[i].label;
    if (label < 0 && !dataset.samples[i].step_labels.empty())
      label = dataset.samples[i].step_labels[0];
    per_class[std::max(label, 0)].push_back(i);
  }
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  for (auto& g : per_class) std::shuffle(g.begin(), g.end(), rng);

  std::vector<std::size_t> take(classes);
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (int c = 0; c < classes; ++c) {
    const double want = fraction * static_cast<double>(per_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(want));
    take[c] = std::min(take[c], per_class[c].size());
    assigned += take[c];
    remainders.push_back({want - std::floor(want), c});
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
  for (const auto& [rem, c] : remainders) {
    if (assigned >= target) break;
    if (take[c] < per_class[c].size()) {
      ++take[c];
      ++assigned;
    }
  }

  std::vector<bool> in_val(n, false);
  for (int c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < take[c]; ++i) in_val[per_class[c][i]] = true;

  SplitResult out;
  out.train = dataset;
  out.val = dataset;
  out.train.samples.clear();
  out.val.samples.clear();
  for (std::size_t i = 0; i < n; ++i)
    (in_val[i] ? out.val : out.train).samples.push_back(dataset.samples[i]);
  return out;
}

Dataset subset(const Dataset& dataset, std::size_t count) {
  Dataset out = dataset;
  if (count < out.samples.size()) out.samples.resize(count);
  return out;
}

}  // namespace srnn
