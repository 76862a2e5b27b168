#include "deskcloud/net/ipv4.hpp"

#include <charconv>
#include <cstdio>

#include "deskcloud/core/error.hpp"

namespace deskcloud {

namespace {

int parse_int(std::string_view s, int lo, int hi, std::string_view whole) {
  int v = -1;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || v < lo || v > hi)
    raise(ErrorCode::InvalidArgument, "malformed address: " + std::string(whole));
  return v;
}

}  // namespace

Ipv4 Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  std::string_view rest = text;
  for (int i = 0; i < 4; ++i) {
    auto dot = rest.find('.');
    if ((i < 3) == (dot == std::string_view::npos)) raise(ErrorCode::InvalidArgument, "malformed address: " + std::string(text));
    std::string_view part = rest.substr(0, dot);
    value = (value << 8) | static_cast<std::uint32_t>(parse_int(part, 0, 255, text));
    rest = i < 3 ? rest.substr(dot + 1) : std::string_view{};
  }
  return Ipv4{value};
}

std::string Ipv4::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", value >> 24, (value >> 16) & 0xff, (value >> 8) & 0xff, value & 0xff);
  return buf;
}

Cidr Cidr::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) raise(ErrorCode::InvalidArgument, "CIDR needs a prefix length: " + std::string(text));
  Cidr c;
  c.base = Ipv4::parse(text.substr(0, slash));
  c.prefix = parse_int(text.substr(slash + 1), 0, 32, text);
  const std::uint64_t mask = c.prefix == 0 ? 0 : (~std::uint64_t{0} << (32 - c.prefix)) & 0xffffffffULL;
  if ((c.base.value & ~static_cast<std::uint32_t>(mask)) != 0)
    raise(ErrorCode::InvalidArgument, "CIDR has host bits set: " + std::string(text));
  return c;
}

std::string Cidr::to_string() const { return base.to_string() + "/" + std::to_string(prefix); }

bool Cidr::contains(Ipv4 ip) const {
  return ip.value >= base.value && static_cast<std::uint64_t>(ip.value) <= base.value + size() - 1;
}

bool Cidr::overlaps(const Cidr& other) const {
  const std::uint64_t a_lo = base.value, a_hi = base.value + size() - 1;
  const std::uint64_t b_lo = other.base.value, b_hi = other.base.value + other.size() - 1;
  return a_lo <= b_hi && b_lo <= a_hi;
}

bool Cidr::is_usable(Ipv4 ip) const {
  return contains(ip) && ip != network() && ip != gateway() && ip != broadcast();
}

std::string Mac::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", static_cast<unsigned>((value >> 40) & 0xff),
                static_cast<unsigned>((value >> 32) & 0xff), static_cast<unsigned>((value >> 24) & 0xff),
                static_cast<unsigned>((value >> 16) & 0xff), static_cast<unsigned>((value >> 8) & 0xff),
                static_cast<unsigned>(value & 0xff));
  return buf;
}

void from_json(const Json& j, Mac& m) {
  const auto s = j.get<std::string>();
  unsigned b[6];
  if (s.size() != 17 || std::sscanf(s.c_str(), "%2x:%2x:%2x:%2x:%2x:%2x", &b[0], &b[1], &b[2], &b[3], &b[4], &b[5]) != 6)
    raise(ErrorCode::InvalidArgument, "malformed MAC: " + s);
  m.value = 0;
  for (unsigned byte : b) m.value = (m.value << 8) | byte;
}

}  // namespace deskcloud
