#include "deskcloud/net/firewall.hpp"

namespace deskcloud {

void validate(const FirewallRule& rule) {
  if (rule.ports.low < 0 || rule.ports.high > 65535 || rule.ports.low > rule.ports.high)
    raise(ErrorCode::InvalidArgument, "port range must satisfy 0 <= low <= high <= 65535");
}

bool matches(const FirewallRule& rule, const Packet& packet) {
  if (rule.protocol != Protocol::any && rule.protocol != packet.protocol) return false;
  if (packet.protocol != Protocol::icmp && rule.protocol != Protocol::icmp && !rule.ports.contains(packet.port))
    return false;
  return rule.remote_cidr.contains(packet.remote_ip);
}

RuleAction evaluate_firewall(std::span<const FirewallRule> rules, const Packet& packet) {
  for (const auto& rule : rules)
    if (matches(rule, packet)) return rule.action;
  return RuleAction::deny;
}

void to_json(Json& j, const FirewallRule& r) {
  j = Json{{"id", r.id},
           {"scope_kind", r.scope_kind},
           {"scope_id", r.scope_id},
           {"protocol", r.protocol},
           {"port_low", r.ports.low},
           {"port_high", r.ports.high},
           {"remote_cidr", r.remote_cidr},
           {"action", r.action},
           {"priority", r.priority}};
}

void from_json(const Json& j, FirewallRule& r) {
  r.id = field_or<Id>(j, "id", Id{});
  j.at("scope_kind").get_to(r.scope_kind);
  j.at("scope_id").get_to(r.scope_id);
  r.protocol = field_or(j, "protocol", Protocol::any);
  r.ports.low = field_or(j, "port_low", 0);
  r.ports.high = field_or(j, "port_high", 65535);
  r.remote_cidr = Cidr::parse(field_or<std::string>(j, "remote_cidr", "0.0.0.0/0"));
  j.at("action").get_to(r.action);
  j.at("priority").get_to(r.priority);
}

}  // namespace deskcloud
