#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "actsel/compress.hpp"
#include "actsel/dataset.hpp"
#include "actsel/idx.hpp"
#include "actsel/matrix.hpp"
#include "actsel/random.hpp"

#ifndef ACTSEL_TEST_DATA_DIR
#define ACTSEL_TEST_DATA_DIR ""
#endif

namespace actsel::test {

inline std::filesystem::path mnist_dir() {
  if (const char* env = std::getenv("ACTSEL_DATA_DIR"); env && *env) return env;
  return ACTSEL_TEST_DATA_DIR;
}

inline bool have_mnist() {
  const auto dir = mnist_dir();
  for (const auto& f : mnist_files()) {
    const auto stem = std::string(f.stem);
    if (!std::filesystem::exists(dir / stem) && !std::filesystem::exists(dir / (stem + ".gz"))) return false;
  }
  return true;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// per_class samples of every class with `width` features; each class lights
// up its own band of features so tiny nets can learn it.
inline Dataset synthetic_dataset(std::size_t per_class, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.images = Matrix(per_class * kNumClasses, width);
  for (std::size_t i = 0; i < per_class * kNumClasses; ++i) {
    const auto label = static_cast<ClassId>(i % kNumClasses);
    d.labels.push_back(label);
    for (std::size_t j = 0; j < width; ++j) {
      const bool band = j % kNumClasses == static_cast<std::size_t>(label);
      d.images(i, j) = band ? rng.uniform(0.5, 1.0) : (rng.uniform01() < 0.7 ? 0.0 : rng.uniform(0.0, 0.3));
    }
  }
  return d;
}

// Writes a dataset as the four gzip-less IDX files load_mnist expects.
inline void write_fake_mnist(const std::filesystem::path& dir, const Dataset& train, const Dataset& test) {
  std::filesystem::create_directories(dir);
  auto put = [&dir](const Dataset& d, const char* images, const char* labels) {
    std::vector<std::uint8_t> pixels;
    for (double v : d.images.values()) pixels.push_back(static_cast<std::uint8_t>(v * 255.0 + 0.5));
    std::vector<std::uint8_t> lab(d.labels.begin(), d.labels.end());
    write_file(dir / images, encode_idx_images(pixels, static_cast<std::uint32_t>(d.size()), kImageSide, kImageSide));
    write_file(dir / labels, encode_idx_labels(lab));
  };
  put(train, "train-images-idx3-ubyte", "train-labels-idx1-ubyte");
  put(test, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("actsel_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace actsel::test
