#include "deskcloud/net/net_manager.hpp"

#include <algorithm>

#include "deskcloud/core/hash.hpp"

namespace deskcloud {

void NetManager::add_pool(NetworkPool pool) {
  if (pool.vlan_id < kMinVlan || pool.vlan_id > kMaxVlan)
    raise(ErrorCode::InvalidArgument, "vlan id must be within 100-4094");
  if (pool.cidr.prefix < 8 || pool.cidr.prefix > 30)
    raise(ErrorCode::InvalidArgument, "network pools need a prefix between /8 and /30");
  if (pools_.contains(pool.id)) raise(ErrorCode::Conflict, "network pool exists: " + pool.id.value);
  for (const auto& [_, p] : pools_) {
    if (p.cidr.overlaps(pool.cidr))
      raise(ErrorCode::Conflict, pool.cidr.to_string() + " overlaps " + p.cidr.to_string());
    if (p.site_id == pool.site_id && p.vlan_id == pool.vlan_id)
      raise(ErrorCode::Conflict, "vlan " + std::to_string(pool.vlan_id) + " already used at this site");
  }
  pool.allocated.clear();
  pools_.emplace(pool.id, std::move(pool));
}

const NetworkPool& NetManager::pool(const Id& id) const {
  auto it = pools_.find(id);
  if (it == pools_.end()) raise(ErrorCode::NotFound, "unknown network pool: " + id.value);
  return it->second;
}

NetworkPool& NetManager::mutable_pool(const Id& id) {
  pool(id);
  return pools_.at(id);
}

bool NetManager::vlan_in_use(const Id& site_id, int vlan) const {
  return std::any_of(pools_.begin(), pools_.end(),
                     [&](const auto& kv) { return kv.second.site_id == site_id && kv.second.vlan_id == vlan; });
}

Ipv4 NetManager::allocate(const Id& pool_id) {
  NetworkPool& p = mutable_pool(pool_id);
  const std::uint32_t first = p.cidr.base.value + 2;
  const std::uint32_t last = p.cidr.broadcast().value - 1;
  for (std::uint64_t v = first; v <= last; ++v) {
    const auto a = static_cast<std::uint32_t>(v);
    if (!p.allocated.contains(a) && !p.reserved.contains(a)) {
      p.allocated.insert(a);
      return Ipv4{a};
    }
  }
  raise(ErrorCode::PoolExhausted, "no free address in pool " + pool_id.value);
}

void NetManager::release(const Id& pool_id, Ipv4 ip) { mutable_pool(pool_id).allocated.erase(ip.value); }

void NetManager::reserve(const Id& pool_id, Ipv4 ip) {
  NetworkPool& p = mutable_pool(pool_id);
  if (!p.cidr.is_usable(ip)) raise(ErrorCode::InvalidArgument, ip.to_string() + " is not a usable address of the pool");
  if (p.allocated.contains(ip.value) || p.reserved.contains(ip.value))
    raise(ErrorCode::Conflict, ip.to_string() + " is already in use");
  p.reserved.insert(ip.value);
}

void NetManager::unreserve(const Id& pool_id, Ipv4 ip) { mutable_pool(pool_id).reserved.erase(ip.value); }

std::optional<Id> NetManager::pool_containing(Ipv4 ip) const {
  for (const auto& [id, p] : pools_)
    if (p.cidr.contains(ip)) return id;
  return std::nullopt;
}

bool NetManager::ip_assigned(Ipv4 ip) const {
  for (const auto& [_, p] : pools_)
    if (p.allocated.contains(ip.value)) return true;
  return false;
}

Mac NetManager::derive_mac(const Id& instance_id, int nic_index) const {
  for (std::uint64_t probe = 0;; ++probe) {
    std::string key = instance_id.value + "/" + std::to_string(nic_index);
    if (probe) key += "#" + std::to_string(probe);
    const std::uint64_t mac = (std::uint64_t{mac_oui_} << 24) | (stable_hash64(key) & 0xffffff);
    if (!macs_.contains(mac)) return Mac{mac};
  }
}

std::vector<NetworkAssignment> NetManager::attribute_networks(const Instance& instance, std::span<const Id> pool_ids) {
  if (instance.state != LifecycleState::Requested && instance.state != LifecycleState::Attributed)
    raise(ErrorCode::WrongState, "networks are attributed while Requested or Attributed");
  if (static_cast<int>(pool_ids.size()) != instance.spec.network_count)
    raise(ErrorCode::InvalidArgument, "expected " + std::to_string(instance.spec.network_count) + " network pools, got " +
                                          std::to_string(pool_ids.size()));
  if (assignments_.contains(instance.id)) raise(ErrorCode::Conflict, "instance already holds networks");

  std::map<Id, std::uint64_t> demand;
  for (const auto& pid : pool_ids) {
    const NetworkPool& p = pool(pid);
    if (p.farm_id && *p.farm_id != instance.farm_id)
      raise(ErrorCode::CrossFarmNetwork, "pool " + pid.value + " is isolated to another farm");
    ++demand[pid];
  }
  for (const auto& [pid, n] : demand)
    if (pool(pid).free_count() < n) raise(ErrorCode::PoolExhausted, "not enough free addresses in pool " + pid.value);

  std::vector<NetworkAssignment> out;
  for (std::size_t i = 0; i < pool_ids.size(); ++i) {
    const int nic = static_cast<int>(i);
    NetworkAssignment a{instance.id, pool_ids[i], allocate(pool_ids[i]), derive_mac(instance.id, nic), nic};
    macs_.insert(a.mac.value);
    out.push_back(a);
  }
  assignments_[instance.id] = out;
  return out;
}

void NetManager::release_instance(const Id& instance_id) {
  auto it = assignments_.find(instance_id);
  if (it == assignments_.end()) return;
  for (const auto& a : it->second) {
    release(a.pool_id, a.ip);
    macs_.erase(a.mac.value);
  }
  assignments_.erase(it);
}

std::span<const NetworkAssignment> NetManager::assignments_of(const Id& instance_id) const {
  auto it = assignments_.find(instance_id);
  if (it == assignments_.end()) return {};
  return it->second;
}

void NetManager::add_firewall_rule(FirewallRule rule) {
  validate(rule);
  for (const auto& [_, r] : firewall_rules_)
    if (r.scope_kind == rule.scope_kind && r.scope_id == rule.scope_id && r.priority == rule.priority)
      raise(ErrorCode::Conflict, "priority " + std::to_string(rule.priority) + " already used in this scope");
  firewall_rules_.emplace(rule.id, std::move(rule));
}

void NetManager::remove_firewall_rule(const Id& id) {
  if (!firewall_rules_.erase(id)) raise(ErrorCode::NotFound, "unknown firewall rule: " + id.value);
}

std::vector<FirewallRule> NetManager::rules_for(ScopeKind kind, const Id& scope_id) const {
  std::vector<FirewallRule> out;
  for (const auto& [_, r] : firewall_rules_)
    if (r.scope_kind == kind && r.scope_id == scope_id) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const FirewallRule& a, const FirewallRule& b) { return a.priority < b.priority; });
  return out;
}

void NetManager::add_lb_rule(LbRule rule) {
  if (rule.backend_instance_ids.empty()) raise(ErrorCode::InvalidArgument, "load balancer rule needs backends");
  if (rule.port < 1 || rule.port > 65535) raise(ErrorCode::InvalidArgument, "port must be within 1-65535");
  if (ip_assigned(rule.vip)) raise(ErrorCode::Conflict, "vip is allocated to an instance: " + rule.vip.to_string());
  for (const auto& [_, r] : lb_rules_)
    if (r.vip == rule.vip && r.port == rule.port) raise(ErrorCode::Conflict, "vip:port already balanced");
  if (auto pid = pool_containing(rule.vip)) {
    if (!pools_.at(*pid).reserved.contains(rule.vip.value)) reserve(*pid, rule.vip);
  }
  lb_rules_.emplace(rule.id, std::move(rule));
}

const LbRule& NetManager::lb_rule(const Id& id) const {
  auto it = lb_rules_.find(id);
  if (it == lb_rules_.end()) raise(ErrorCode::NotFound, "unknown load balancer rule: " + id.value);
  return it->second;
}

void NetManager::record_pick(const Id& rule_id, const Id& backend) {
  lb_rule(rule_id);
  ++lb_rules_.at(rule_id).pick_counts[backend];
}

void to_json(Json& j, const NetworkPool& p) {
  j = Json{{"id", p.id},         {"name", p.name},           {"site_id", p.site_id},
           {"cidr", p.cidr},     {"vlan_id", p.vlan_id},     {"farm_id", p.farm_id},
           {"allocated", p.allocated}, {"reserved", p.reserved}};
}

void from_json(const Json& j, NetworkPool& p) {
  j.at("id").get_to(p.id);
  j.at("name").get_to(p.name);
  j.at("site_id").get_to(p.site_id);
  j.at("cidr").get_to(p.cidr);
  j.at("vlan_id").get_to(p.vlan_id);
  j.at("farm_id").get_to(p.farm_id);
  j.at("allocated").get_to(p.allocated);
  j.at("reserved").get_to(p.reserved);
}

void to_json(Json& j, const NetworkAssignment& a) {
  j = Json{{"instance_id", a.instance_id}, {"pool_id", a.pool_id}, {"ip", a.ip}, {"mac", a.mac}, {"nic_index", a.nic_index}};
}

void from_json(const Json& j, NetworkAssignment& a) {
  j.at("instance_id").get_to(a.instance_id);
  j.at("pool_id").get_to(a.pool_id);
  j.at("ip").get_to(a.ip);
  j.at("mac").get_to(a.mac);
  j.at("nic_index").get_to(a.nic_index);
}

void to_json(Json& j, const NetManager& n) {
  Json pools = Json::array();
  for (const auto& [_, p] : n.pools_) pools.push_back(p);
  Json assignments = Json::array();
  for (const auto& [_, list] : n.assignments_)
    for (const auto& a : list) assignments.push_back(a);
  Json fw = Json::array();
  for (const auto& [_, r] : n.firewall_rules_) fw.push_back(r);
  Json lb = Json::array();
  for (const auto& [_, r] : n.lb_rules_) lb.push_back(r);
  j = Json{{"mac_oui", n.mac_oui_}, {"pools", std::move(pools)}, {"assignments", std::move(assignments)},
           {"firewall_rules", std::move(fw)}, {"lb_rules", std::move(lb)}};
}

void from_json(const Json& j, NetManager& n) {
  n = NetManager(j.at("mac_oui").get<std::uint32_t>());
  for (const auto& p : j.at("pools")) {
    auto pool = p.get<NetworkPool>();
    n.pools_.emplace(pool.id, std::move(pool));
  }
  for (const auto& a : j.at("assignments")) {
    auto as = a.get<NetworkAssignment>();
    n.macs_.insert(as.mac.value);
    n.assignments_[as.instance_id].push_back(as);
  }
  for (const auto& r : j.at("firewall_rules")) {
    auto rule = r.get<FirewallRule>();
    n.firewall_rules_.emplace(rule.id, std::move(rule));
  }
  for (const auto& r : j.at("lb_rules")) {
    auto rule = r.get<LbRule>();
    n.lb_rules_.emplace(rule.id, std::move(rule));
  }
}

}  // namespace deskcloud
