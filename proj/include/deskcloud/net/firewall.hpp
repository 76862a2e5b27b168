#pragma once

#include <span>

#include "deskcloud/core/id.hpp"
#include "deskcloud/net/ipv4.hpp"

namespace deskcloud {

enum class Protocol { tcp, udp, icmp, any };
enum class RuleAction { allow, deny };
enum class ScopeKind { instance, farm };

template <>
struct EnumNames<Protocol> {
  static constexpr std::array<std::pair<Protocol, std::string_view>, 4> names{{
      {Protocol::tcp, "tcp"}, {Protocol::udp, "udp"}, {Protocol::icmp, "icmp"}, {Protocol::any, "any"}}};
};
template <>
struct EnumNames<RuleAction> {
  static constexpr std::array<std::pair<RuleAction, std::string_view>, 2> names{{
      {RuleAction::allow, "allow"}, {RuleAction::deny, "deny"}}};
};
template <>
struct EnumNames<ScopeKind> {
  static constexpr std::array<std::pair<ScopeKind, std::string_view>, 2> names{{
      {ScopeKind::instance, "instance"}, {ScopeKind::farm, "farm"}}};
};

struct PortRange {
  int low = 0;
  int high = 65535;
  bool contains(int port) const { return port >= low && port <= high; }
};

struct FirewallRule {
  Id id;
  ScopeKind scope_kind = ScopeKind::instance;
  Id scope_id;
  Protocol protocol = Protocol::any;
  PortRange ports;
  Cidr remote_cidr;
  RuleAction action = RuleAction::deny;
  int priority = 0;
};

struct Packet {
  Protocol protocol = Protocol::tcp;
  int port = 0;
  Ipv4 remote_ip;
};

void validate(const FirewallRule& rule);

// icmp carries no ports, so port ranges are ignored for it.
bool matches(const FirewallRule& rule, const Packet& packet);

// First matching rule wins; rules must be sorted by ascending priority.
// No match means deny.
RuleAction evaluate_firewall(std::span<const FirewallRule> rules, const Packet& packet);

void to_json(Json& j, const FirewallRule& r);
void from_json(const Json& j, FirewallRule& r);

}  // namespace deskcloud
