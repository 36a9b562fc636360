#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actsel/compress.hpp"
#include "actsel/dataset.hpp"

namespace actsel {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// A parsed IDX unsigned-byte array: big-endian magic, big-endian u32
// dimension sizes, then the payload.
struct IdxArray {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::span<const std::uint8_t> payload;  // views into the parsed buffer
};

// Throws FormatError on a wrong magic or a truncated payload; the message
// names the byte offset where the data ends.
IdxArray parse_idx(std::span<const std::uint8_t> bytes, std::uint32_t expected_magic,
                   std::string_view what);

Dataset decode_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes);

// Accepts raw or gzip-compressed IDX files.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

// Minimal well-formed IDX encodings, used by tests and tooling.
Bytes encode_idx_images(std::span<const std::uint8_t> pixels, std::uint32_t count,
                        std::uint32_t rows, std::uint32_t cols);
Bytes encode_idx_labels(std::span<const std::uint8_t> labels);

struct MnistFileSpec {
  std::string_view stem;  // e.g. "train-images-idx3-ubyte"
  std::uint32_t magic;
  std::uint32_t count;
  std::string_view sha256;  // of the decompressed IDX bytes
  std::string_view gz_md5;  // of the canonical .gz distribution file
};

const std::array<MnistFileSpec, 4>& mnist_files();

// Locates stem or stem.gz in dir; throws InputError naming the path when absent.
std::filesystem::path locate_idx(const std::filesystem::path& dir, std::string_view stem);

struct MnistSplit {
  Dataset train;
  Dataset test;
};

MnistSplit load_mnist(const std::filesystem::path& dir);

struct VerifyEntry {
  std::string stem;
  std::filesystem::path path;
  bool ok = false;
  std::uint32_t count = 0;
  std::string message;
};

// Magic numbers, dimensions (60000/10000 × 28 × 28) and checksums.
std::vector<VerifyEntry> verify_mnist(const std::filesystem::path& dir);

}  // namespace actsel
