#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace contentious {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes. Throws IoError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Stable per-stage seed: first 8 bytes of sha256("<seed>:<stage>").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

}  // namespace contentious
