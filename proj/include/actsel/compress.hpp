#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace actsel {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

bool is_gzip(std::span<const std::uint8_t> bytes);
Bytes gunzip(std::span<const std::uint8_t> bytes);

// Reads a file and transparently decompresses it when it is gzip.
Bytes read_maybe_gzip(const std::filesystem::path& path);

// Extracts one member (matched by trailing path component) from a zip
// archive. Supports stored and deflated members.
Bytes zip_extract(std::span<const std::uint8_t> archive, std::string_view member_basename);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace actsel
