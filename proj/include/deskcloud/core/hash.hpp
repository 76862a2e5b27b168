#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace deskcloud {

// 64-bit FNV-1a followed by a splitmix finalizer. Stable across platforms;
// used for ring positions and derived addresses.
std::uint64_t stable_hash64(std::string_view data) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

std::string sha256_hex(std::string_view data);

std::uint32_t crc32_of(std::string_view data) noexcept;

}  // namespace deskcloud
