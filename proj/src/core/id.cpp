#include "deskcloud/core/id.hpp"

#include <algorithm>

#include "deskcloud/core/hash.hpp"

namespace deskcloud {

namespace {

constexpr char kCrockford[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

void encode_base32(std::uint64_t value, int chars, std::string& out) {
  for (int i = chars - 1; i >= 0; --i)
    out.push_back(kCrockford[(value >> (5 * i)) & 0x1f]);
}

}  // namespace

bool is_well_formed_id(const std::string& s) noexcept {
  if (s.size() != kIdLength) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::find(std::begin(kCrockford), std::end(kCrockford) - 1, c) != std::end(kCrockford) - 1;
  });
}

std::uint64_t IdGenerator::random64() noexcept {
  return splitmix64(seed_ ^ splitmix64(++counter_));
}

Id IdGenerator::next(SimTime now) {
  std::int64_t ms = std::max<std::int64_t>(to_ms(now), last_ms_);
  if (ms == last_ms_) {
    // Same millisecond: increment the 80-bit random part.
    if (++last_lo_ == 0) ++last_hi_;
    if (last_hi_ > 0xffff) {
      ++ms;
      last_hi_ = random64() & 0xffff;
      last_lo_ = random64();
    }
  } else {
    last_hi_ = random64() & 0xffff;
    last_lo_ = random64();
  }
  last_ms_ = ms;

  std::string out;
  out.reserve(kIdLength);
  encode_base32(static_cast<std::uint64_t>(ms) & 0xffffffffffffULL, 10, out);
  // 80 random bits as 16 characters: the top 1 char carries bits 79..75 and
  // so on; split the value into a 20-bit high part and a 60-bit low part.
  const std::uint64_t high20 = (last_hi_ << 4) | (last_lo_ >> 60);
  const std::uint64_t low60 = last_lo_ & 0x0fffffffffffffffULL;
  encode_base32(high20, 4, out);
  encode_base32(low60, 12, out);
  return Id{std::move(out)};
}

void IdGenerator::restore(const State& s) noexcept {
  seed_ = s.seed;
  counter_ = s.counter;
  last_ms_ = s.last_ms;
  last_hi_ = s.last_hi;
  last_lo_ = s.last_lo;
}

}  // namespace deskcloud
