#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

struct Ipv4 {
  std::uint32_t value = 0;

  static Ipv4 parse(std::string_view text);
  std::string to_string() const;
  auto operator<=>(const Ipv4&) const = default;
};

struct Cidr {
  Ipv4 base;
  int prefix = 32;

  // Rejects prefixes with host bits set.
  static Cidr parse(std::string_view text);
  std::string to_string() const;

  std::uint64_t size() const { return std::uint64_t{1} << (32 - prefix); }
  Ipv4 network() const { return base; }
  Ipv4 broadcast() const { return Ipv4{static_cast<std::uint32_t>(base.value + size() - 1)}; }
  Ipv4 gateway() const { return Ipv4{base.value + 1}; }
  bool contains(Ipv4 ip) const;
  bool overlaps(const Cidr& other) const;
  // True for addresses that may be handed to an instance: inside the prefix
  // and not the network, gateway or broadcast address.
  bool is_usable(Ipv4 ip) const;
  std::uint64_t usable_count() const { return size() >= 4 ? size() - 3 : 0; }

  bool operator==(const Cidr&) const = default;
};

struct Mac {
  std::uint64_t value = 0;  // low 48 bits

  std::string to_string() const;
  auto operator<=>(const Mac&) const = default;
};

inline void to_json(Json& j, const Ipv4& ip) { j = ip.to_string(); }
inline void from_json(const Json& j, Ipv4& ip) { ip = Ipv4::parse(j.get<std::string>()); }
inline void to_json(Json& j, const Cidr& c) { j = c.to_string(); }
inline void from_json(const Json& j, Cidr& c) { c = Cidr::parse(j.get<std::string>()); }
inline void to_json(Json& j, const Mac& m) { j = m.to_string(); }
void from_json(const Json& j, Mac& m);

}  // namespace deskcloud
