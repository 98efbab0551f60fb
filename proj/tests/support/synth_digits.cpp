#include "support/synth_digits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

namespace srnn::testsupport {

namespace {

struct Pt {
  double x, y;
};

using Stroke = std::vector<Pt>;

// Stroke skeletons in a unit box, y growing downward.
std::vector<Stroke> digit_strokes(int digit) {
  switch (digit) {
    case 0:
      return {{{0.50, 0.12}, {0.72, 0.25}, {0.75, 0.55}, {0.60, 0.86},
               {0.40, 0.86}, {0.25, 0.55}, {0.28, 0.25}, {0.50, 0.12}}};
    case 1:
      return {{{0.35, 0.28}, {0.52, 0.12}, {0.52, 0.88}}};
    case 2:
      return {{{0.27, 0.30}, {0.38, 0.14}, {0.62, 0.13}, {0.73, 0.30},
               {0.30, 0.85}, {0.75, 0.85}}};
    case 3:
      return {{{0.28, 0.16}, {0.65, 0.18}, {0.48, 0.45}, {0.70, 0.62},
               {0.55, 0.87}, {0.27, 0.82}}};
    case 4:
      return {{{0.68, 0.88}, {0.68, 0.12}, {0.24, 0.62}, {0.80, 0.62}}};
    case 5:
      return {{{0.72, 0.14}, {0.32, 0.14}, {0.30, 0.45}, {0.60, 0.44},
               {0.73, 0.64}, {0.58, 0.86}, {0.27, 0.80}}};
    case 6:
      return {{{0.66, 0.13}, {0.40, 0.30}, {0.29, 0.60}, {0.40, 0.86},
               {0.64, 0.80}, {0.67, 0.58}, {0.32, 0.55}}};
    case 7:
      return {{{0.24, 0.14}, {0.76, 0.14}, {0.42, 0.88}}};
    case 8:
      return {{{0.50, 0.12}, {0.68, 0.27}, {0.50, 0.46}, {0.32, 0.27},
               {0.50, 0.12}},
              {{0.50, 0.46}, {0.73, 0.66}, {0.50, 0.89}, {0.27, 0.66},
               {0.50, 0.46}}};
    case 9:
      return {{{0.66, 0.34}, {0.52, 0.14}, {0.33, 0.22}, {0.31, 0.42},
               {0.50, 0.52}, {0.66, 0.40}},
              {{0.66, 0.14}, {0.66, 0.55}, {0.55, 0.88}}};
  }
  return {};
}

double segment_distance(Pt p, Pt a, Pt b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

DigitImages render_digits(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  DigitImages out;
  out.count = count;
  out.pixels.resize(count * 28 * 28);
  out.labels.resize(count);

  for (std::size_t i = 0; i < count; ++i) {
    const int digit = static_cast<int>(i % 10);
    out.labels[i] = static_cast<std::uint8_t>(digit);

    const double angle = (unit(rng) - 0.5) * 0.30;
    const double scale = 0.85 + 0.30 * unit(rng);
    const double dx = (unit(rng) - 0.5) * 0.16;
    const double dy = (unit(rng) - 0.5) * 0.16;
    const double thickness = 0.045 + 0.035 * unit(rng);
    const double level = 0.75 + 0.25 * unit(rng);
    const double ca = std::cos(angle), sa = std::sin(angle);

    auto strokes = digit_strokes(digit);
    for (auto& stroke : strokes)
      for (auto& p : stroke) {
        const double x = (p.x - 0.5) * scale, y = (p.y - 0.5) * scale;
        p = {0.5 + ca * x - sa * y + dx, 0.5 + sa * x + ca * y + dy};
      }

    std::uint8_t* img = &out.pixels[i * 28 * 28];
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) {
        const Pt p{(c + 0.5) / 28.0, (r + 0.5) / 28.0};
        double d = 1e9;
        for (const auto& stroke : strokes)
          for (std::size_t s = 0; s + 1 < stroke.size(); ++s)
            d = std::min(d, segment_distance(p, stroke[s], stroke[s + 1]));
        const double z = d / thickness;
        double v = level * std::exp(-z * z);
        v += 0.02 * unit(rng);  // sensor-ish noise
        img[r * 28 + c] =
            static_cast<std::uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0);
      }
  }
  return out;
}

namespace {

void write_be32(std::ofstream& os, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void write_idx_images(const std::string& path, const DigitImages& imgs) {
  std::ofstream os(path, std::ios::binary);
  write_be32(os, 0x00000803);
  write_be32(os, static_cast<std::uint32_t>(imgs.count));
  write_be32(os, 28);
  write_be32(os, 28);
  os.write(reinterpret_cast<const char*>(imgs.pixels.data()),
           static_cast<std::streamsize>(imgs.pixels.size()));
}

void write_idx_labels(const std::string& path, const DigitImages& imgs) {
  std::ofstream os(path, std::ios::binary);
  write_be32(os, 0x00000801);
  write_be32(os, static_cast<std::uint32_t>(imgs.count));
  os.write(reinterpret_cast<const char*>(imgs.labels.data()),
           static_cast<std::streamsize>(imgs.labels.size()));
}

DigitFiles digit_files(const std::string& dir, std::size_t train_count,
                       std::size_t test_count, std::uint64_t seed) {
  namespace fs = std::filesystem;
  DigitFiles files;

  if (const char* mnist = std::getenv("MNIST_DIR")) {
    const fs::path root(mnist);
    const fs::path ti = root / "train-images-idx3-ubyte";
    const fs::path tl = root / "train-labels-idx1-ubyte";
    const fs::path ei = root / "t10k-images-idx3-ubyte";
    const fs::path el = root / "t10k-labels-idx1-ubyte";
    if (fs::exists(ti) && fs::exists(tl) && fs::exists(ei) && fs::exists(el)) {
      files.images = ti.string();
      files.labels = tl.string();
      files.test_images = ei.string();
      files.test_labels = el.string();
      files.real_mnist = true;
      return files;
    }
  }

  fs::create_directories(dir);
  files.images = (fs::path(dir) / "train-images.idx").string();
  files.labels = (fs::path(dir) / "train-labels.idx").string();
  files.test_images = (fs::path(dir) / "test-images.idx").string();
  files.test_labels = (fs::path(dir) / "test-labels.idx").string();
  if (!fs::exists(files.images)) {
    DigitImages train = render_digits(train_count, seed);
    DigitImages test = render_digits(test_count, seed ^ 0x7e57ULL);
    write_idx_images(files.images, train);
    write_idx_labels(files.labels, train);
    write_idx_images(files.test_images, test);
    write_idx_labels(files.test_labels, test);
  }
  return files;
}

}  // namespace srnn::testsupport
