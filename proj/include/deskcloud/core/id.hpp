#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "deskcloud/core/clock.hpp"

namespace deskcloud {

// 26-character Crockford base32 identifier: 10 characters of millisecond
// timestamp followed by 16 characters (80 bits) of seeded randomness.
// Lexicographic order equals generation order within one generator.
struct Id {
  std::string value;

  bool empty() const noexcept { return value.empty(); }
  auto operator<=>(const Id&) const = default;
};

inline constexpr std::size_t kIdLength = 26;

bool is_well_formed_id(const std::string& s) noexcept;

class IdGenerator {
 public:
  IdGenerator() = default;
  explicit IdGenerator(std::uint64_t seed) : seed_(seed) {}

  Id next(SimTime now);

  // Seeded random stream shared with token and salt generation so every
  // draw is captured by snapshots.
  std::uint64_t random64() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  struct State {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;
    std::int64_t last_ms = -1;
    std::uint64_t last_hi = 0;  // top 16 bits of the random part
    std::uint64_t last_lo = 0;  // low 64 bits of the random part
  };
  State state() const noexcept { return {seed_, counter_, last_ms_, last_hi_, last_lo_}; }
  void restore(const State& s) noexcept;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  std::int64_t last_ms_ = -1;
  std::uint64_t last_hi_ = 0;
  std::uint64_t last_lo_ = 0;
};

}  // namespace deskcloud

template <>
struct std::hash<deskcloud::Id> {
  std::size_t operator()(const deskcloud::Id& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
