#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "deskcloud/core/id.hpp"
#include "deskcloud/core/types.hpp"
#include "deskcloud/net/firewall.hpp"
#include "deskcloud/net/ipv4.hpp"
#include "deskcloud/net/load_balancer.hpp"

namespace deskcloud {

inline constexpr int kMinVlan = 100;
inline constexpr int kMaxVlan = 4094;

struct NetworkPool {
  Id id;
  std::string name;
  Id site_id;
  Cidr cidr;
  int vlan_id = kMinVlan;
  std::optional<Id> farm_id;  // set: isolated to that farm; unset: shared
  std::set<std::uint32_t> allocated;
  std::set<std::uint32_t> reserved;  // load-balancer VIPs

  std::uint64_t free_count() const { return cidr.usable_count() - allocated.size() - reserved.size(); }
};

struct NetworkAssignment {
  Id instance_id;
  Id pool_id;
  Ipv4 ip;
  Mac mac;
  int nic_index = 0;
};

class NetManager {
 public:
  explicit NetManager(std::uint32_t mac_oui = 0x02dc00) : mac_oui_(mac_oui & 0xffffff) {}

  // CIDRs of distinct pools may not overlap; VLAN ids are unique per site.
  void add_pool(NetworkPool pool);
  const NetworkPool& pool(const Id& id) const;
  const std::map<Id, NetworkPool>& pools() const { return pools_; }
  bool vlan_in_use(const Id& site_id, int vlan) const;

  // Lowest free usable address. PoolExhausted when none is left.
  Ipv4 allocate(const Id& pool_id);
  void release(const Id& pool_id, Ipv4 ip);
  void reserve(const Id& pool_id, Ipv4 ip);
  void unreserve(const Id& pool_id, Ipv4 ip);
  std::optional<Id> pool_containing(Ipv4 ip) const;
  bool ip_assigned(Ipv4 ip) const;

  // One assignment per listed pool (pools may repeat). All-or-nothing.
  std::vector<NetworkAssignment> attribute_networks(const Instance& instance, std::span<const Id> pool_ids);
  void release_instance(const Id& instance_id);
  std::span<const NetworkAssignment> assignments_of(const Id& instance_id) const;
  const std::map<Id, std::vector<NetworkAssignment>>& assignments() const { return assignments_; }

  // MAC = OUI + 3 bytes of hash(instance_id, nic_index); collisions probe a
  // salt counter so the result stays deterministic and globally unique.
  Mac derive_mac(const Id& instance_id, int nic_index) const;

  void add_firewall_rule(FirewallRule rule);
  void remove_firewall_rule(const Id& id);
  const std::map<Id, FirewallRule>& firewall_rules() const { return firewall_rules_; }
  std::vector<FirewallRule> rules_for(ScopeKind kind, const Id& scope_id) const;

  void add_lb_rule(LbRule rule);
  const LbRule& lb_rule(const Id& id) const;
  const std::map<Id, LbRule>& lb_rules() const { return lb_rules_; }
  void record_pick(const Id& rule_id, const Id& backend);

  friend void to_json(Json& j, const NetManager& n);
  friend void from_json(const Json& j, NetManager& n);

 private:
  NetworkPool& mutable_pool(const Id& id);

  std::uint32_t mac_oui_;
  std::map<Id, NetworkPool> pools_;
  std::map<Id, std::vector<NetworkAssignment>> assignments_;
  std::set<std::uint64_t> macs_;
  std::map<Id, FirewallRule> firewall_rules_;
  std::map<Id, LbRule> lb_rules_;
};

void to_json(Json& j, const NetworkPool& p);
void from_json(const Json& j, NetworkPool& p);
void to_json(Json& j, const NetworkAssignment& a);
void from_json(const Json& j, NetworkAssignment& a);

}  // namespace deskcloud
