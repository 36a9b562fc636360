#include "actsel/idx.hpp"

#include <cstdio>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (static_cast<std::uint32_t>(b[at]) << 24) | (static_cast<std::uint32_t>(b[at + 1]) << 16) |
         (static_cast<std::uint32_t>(b[at + 2]) << 8) | static_cast<std::uint32_t>(b[at + 3]);
}

void put_be32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> bytes, std::uint32_t expected_magic, std::string_view what) {
  const std::string name(what);
  if (bytes.size() < 4) {
    throw FormatError(name + ": truncated at byte offset " + std::to_string(bytes.size()) +
                      " (header needs 4 bytes)");
  }
  IdxArray arr;
  arr.magic = be32(bytes, 0);
  if (arr.magic != expected_magic) {
    throw FormatError(name + ": magic number " + hex32(arr.magic) + ", expected " + hex32(expected_magic));
  }
  const std::size_t ndims = arr.magic & 0xff;
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) {
    throw FormatError(name + ": truncated at byte offset " + std::to_string(bytes.size()) + " (header needs " +
                      std::to_string(header) + " bytes)");
  }
  std::size_t payload = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    arr.dims.push_back(be32(bytes, 4 + 4 * d));
    payload *= arr.dims.back();
  }
  if (bytes.size() < header + payload) {
    throw FormatError(name + ": truncated at byte offset " + std::to_string(bytes.size()) + ", expected " +
                      std::to_string(header + payload) + " bytes");
  }
  arr.payload = bytes.subspan(header, payload);
  return arr;
}

Dataset decode_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes) {
  const IdxArray images = parse_idx(image_bytes, kIdxImageMagic, "images file");
  const IdxArray labels = parse_idx(label_bytes, kIdxLabelMagic, "labels file");
  const std::size_t n = images.dims[0];
  if (labels.dims[0] != n) {
    throw ConsistencyError("images file holds " + std::to_string(n) + " images but labels file holds " +
                           std::to_string(labels.dims[0]) + " labels");
  }
  const std::size_t pixels = static_cast<std::size_t>(images.dims[1]) * images.dims[2];

  Dataset data;
  data.images = Matrix(n, pixels);
  auto out = data.images.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = images.payload[i] / 255.0;
  data.labels.reserve(n);
  for (std::uint8_t y : labels.payload) {
    if (y >= kNumClasses) throw FormatError("labels file: class id " + std::to_string(y) + " out of range");
    data.labels.push_back(y);
  }
  return data;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const Bytes images = read_maybe_gzip(images_path);
  const Bytes labels = read_maybe_gzip(labels_path);
  return decode_idx(images, labels);
}

Bytes encode_idx_images(std::span<const std::uint8_t> pixels, std::uint32_t count, std::uint32_t rows,
                        std::uint32_t cols) {
  Bytes out;
  put_be32(out, kIdxImageMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

Bytes encode_idx_labels(std::span<const std::uint8_t> labels) {
  Bytes out;
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

const std::array<MnistFileSpec, 4>& mnist_files() {
  static const std::array<MnistFileSpec, 4> files{{
      {"train-images-idx3-ubyte", kIdxImageMagic, 60000,
       "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db", "f68b3c2dcbeaaa9fbdd348bbdeb94873"},
      {"train-labels-idx1-ubyte", kIdxLabelMagic, 60000,
       "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5", "d53e105ee54ea40749a09fcbcd1e9432"},
      {"t10k-images-idx3-ubyte", kIdxImageMagic, 10000,
       "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7", "9fb629c4189551a2d022fa330f9573f3"},
      {"t10k-labels-idx1-ubyte", kIdxLabelMagic, 10000,
       "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2", "ec29112dd5afa0611ce80d1b7f02629c"},
  }};
  return files;
}

std::filesystem::path locate_idx(const std::filesystem::path& dir, std::string_view stem) {
  const auto raw = dir / std::string(stem);
  if (std::filesystem::exists(raw)) return raw;
  const auto gz = dir / (std::string(stem) + ".gz");
  if (std::filesystem::exists(gz)) return gz;
  throw InputError("missing data file " + raw.string() + " (or " + gz.filename().string() + ")");
}

MnistSplit load_mnist(const std::filesystem::path& dir) {
  const auto& f = mnist_files();
  MnistSplit split;
  split.train = load_idx(locate_idx(dir, f[0].stem), locate_idx(dir, f[1].stem));
  split.test = load_idx(locate_idx(dir, f[2].stem), locate_idx(dir, f[3].stem));
  return split;
}

std::vector<VerifyEntry> verify_mnist(const std::filesystem::path& dir) {
  std::vector<VerifyEntry> report;
  for (const auto& spec : mnist_files()) {
    VerifyEntry entry;
    entry.stem = spec.stem;
    try {
      entry.path = locate_idx(dir, spec.stem);
      const Bytes bytes = read_maybe_gzip(entry.path);
      const IdxArray arr = parse_idx(bytes, spec.magic, entry.path.filename().string());
      entry.count = arr.dims.at(0);
      if (entry.count != spec.count) {
        entry.message = "expected " + std::to_string(spec.count) + " items, found " + std::to_string(entry.count);
      } else if (spec.magic == kIdxImageMagic && (arr.dims.at(1) != kImageSide || arr.dims.at(2) != kImageSide)) {
        entry.message = "expected 28x28 images";
      } else if (const auto digest = sha256_hex(bytes); digest != spec.sha256) {
        entry.message = "checksum mismatch: sha256 " + digest;
      } else {
        entry.ok = true;
        entry.message = "ok";
      }
    } catch (const Error& e) {
      entry.message = e.what();
    }
    report.push_back(std::move(entry));
  }
  return report;
}

}  // namespace actsel
