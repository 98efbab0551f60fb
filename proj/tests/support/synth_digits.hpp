#pragma once

// Renders jittered stroke-based digits into 28x28 grayscale IDX files so the
// sequential-image pipeline can run without external downloads. Real MNIST
// files are used instead when MNIST_DIR points at them.

#include <cstdint>
#include <string>
#include <vector>

namespace srnn::testsupport {

struct DigitImages {
  std::vector<std::uint8_t> pixels;  // n * 28 * 28
  std::vector<std::uint8_t> labels;
  std::size_t count = 0;
};

DigitImages render_digits(std::size_t count, std::uint64_t seed);

void write_idx_images(const std::string& path, const DigitImages& imgs);
void write_idx_labels(const std::string& path, const DigitImages& imgs);

// Creates (or reuses) train/test IDX files under `dir`; honors MNIST_DIR.
// Returns {images, labels, test_images, test_labels}.
struct DigitFiles {
  std::string images, labels, test_images, test_labels;
  bool real_mnist = false;
};

DigitFiles digit_files(const std::string& dir, std::size_t train_count,
                       std::size_t test_count, std::uint64_t seed);

}  // namespace srnn::testsupport
