#include "actsel/compress.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <array>
#include <fstream>
#include <iterator>
#include <memory>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 4 > b.size()) throw FormatError("zip: record past end of archive");
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 2 > b.size()) throw FormatError("zip: record past end of archive");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

// window_bits: 16 + MAX_WBITS for gzip, -MAX_WBITS for raw deflate.
Bytes inflate_all(std::span<const std::uint8_t> in, int window_bits, std::size_t size_hint) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) throw FormatError("zlib initialisation failed");
  std::unique_ptr<z_stream, decltype(&inflateEnd)> guard(&zs, &inflateEnd);

  Bytes out;
  out.reserve(size_hint);
  std::array<std::uint8_t, 1 << 16> buf{};
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      throw FormatError("compressed stream is corrupt or truncated at input byte offset " +
                        std::to_string(zs.total_in));
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      throw FormatError("compressed stream truncated at input byte offset " + std::to_string(zs.total_in));
    }
  }
  return out;
}

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to " + path.string());
}

bool is_gzip(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

Bytes gunzip(std::span<const std::uint8_t> bytes) {
  return inflate_all(bytes, 16 + MAX_WBITS, bytes.size() * 4);
}

Bytes read_maybe_gzip(const std::filesystem::path& path) {
  Bytes raw = read_file(path);
  if (is_gzip(raw)) return gunzip(raw);
  return raw;
}

Bytes zip_extract(std::span<const std::uint8_t> archive, std::string_view member_basename) {
  constexpr std::uint32_t kEndOfDirectory = 0x06054b50;
  constexpr std::uint32_t kDirectoryEntry = 0x02014b50;
  constexpr std::uint32_t kLocalHeader = 0x04034b50;
  if (archive.size() < 22) throw FormatError("zip: archive too short");

  std::size_t eocd = archive.size() - 22;
  while (le32(archive, eocd) != kEndOfDirectory) {
    if (eocd == 0) throw FormatError("zip: end-of-directory record not found");
    --eocd;
  }
  const std::size_t entries = le16(archive, eocd + 10);
  std::size_t at = le32(archive, eocd + 16);
  for (std::size_t e = 0; e < entries; ++e) {
    if (le32(archive, at) != kDirectoryEntry) throw FormatError("zip: bad central directory entry");
    const std::uint16_t method = le16(archive, at + 10);
    const std::uint32_t compressed = le32(archive, at + 20);
    const std::uint32_t uncompressed = le32(archive, at + 24);
    const std::uint16_t name_len = le16(archive, at + 28);
    const std::uint16_t extra_len = le16(archive, at + 30);
    const std::uint16_t comment_len = le16(archive, at + 32);
    const std::uint32_t local = le32(archive, at + 42);
    if (at + 46 + name_len > archive.size()) throw FormatError("zip: truncated directory");
    const std::string name(reinterpret_cast<const char*>(archive.data() + at + 46), name_len);
    at += 46u + name_len + extra_len + comment_len;

    const auto slash = name.find_last_of('/');
    const std::string_view base = slash == std::string::npos ? std::string_view(name)
                                                             : std::string_view(name).substr(slash + 1);
    if (base != member_basename) continue;

    if (le32(archive, local) != kLocalHeader) throw FormatError("zip: bad local header");
    const std::size_t data_at = local + 30u + le16(archive, local + 26) + le16(archive, local + 28);
    if (data_at + compressed > archive.size()) throw FormatError("zip: member data truncated");
    const auto payload = archive.subspan(data_at, compressed);
    if (method == 0) return Bytes(payload.begin(), payload.end());
    if (method == 8) return inflate_all(payload, -MAX_WBITS, uncompressed);
    throw FormatError("zip: unsupported compression method " + std::to_string(method));
  }
  throw FormatError("zip: member " + std::string(member_basename) + " not found");
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace actsel
