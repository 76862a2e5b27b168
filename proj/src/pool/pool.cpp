#include "deskcloud/pool/pool.hpp"

#include <algorithm>

#include "deskcloud/core/lifecycle.hpp"

namespace deskcloud {

bool fits(const Host& host, const ResourceSpec& spec, double overcommit_ratio) {
  const double vcpu_limit = static_cast<double>(host.vcpu_capacity) * overcommit_ratio;
  return static_cast<double>(host.used_vcpu + spec.vcpu) <= vcpu_limit &&
         host.used_memory_gib + spec.memory_gib <= host.memory_capacity_gib &&
         host.used_disk_gib + spec.disk_gib <= host.disk_capacity_gib;
}

void PoolRegistry::add_pool(ServerPool pool) {
  if (pools_.contains(pool.id)) raise(ErrorCode::Conflict, "pool already exists: " + pool.id.value);
  if (!(pool.overcommit_ratio >= 1.0)) raise(ErrorCode::InvalidArgument, "overcommit ratio must be >= 1");
  pools_.emplace(pool.id, std::move(pool));
}

void PoolRegistry::add_host(Host host) {
  auto pit = pools_.find(host.pool_id);
  if (pit == pools_.end()) raise(ErrorCode::NotFound, "unknown pool: " + host.pool_id.value);
  if (hosts_.contains(host.id)) raise(ErrorCode::Conflict, "host already exists: " + host.id.value);
  if (host.vcpu_capacity < 1 || host.memory_capacity_gib < 1 || host.disk_capacity_gib < 1)
    raise(ErrorCode::InvalidArgument, "host capacities must be positive");
  host.site_id = pit->second.site_id;
  host.role = HostRole::slave;
  auto& ids = pit->second.host_ids;
  ids.insert(std::upper_bound(ids.begin(), ids.end(), host.id), host.id);
  const Id pool_id = host.pool_id;
  const bool up = host.liveness == Liveness::up;
  hosts_.emplace(host.id, std::move(host));
  if (up && !master_of(pool_id)) elect_master(pool_id);
}

const Host& PoolRegistry::host(const Id& id) const {
  auto it = hosts_.find(id);
  if (it == hosts_.end()) raise(ErrorCode::NotFound, "unknown host: " + id.value);
  return it->second;
}

Host& PoolRegistry::mutable_host(const Id& id) {
  auto it = hosts_.find(id);
  if (it == hosts_.end()) raise(ErrorCode::NotFound, "unknown host: " + id.value);
  return it->second;
}

const ServerPool& PoolRegistry::pool(const Id& id) const {
  auto it = pools_.find(id);
  if (it == pools_.end()) raise(ErrorCode::NotFound, "unknown pool: " + id.value);
  return it->second;
}

std::optional<Id> PoolRegistry::master_of(const Id& pool_id) const {
  for (const auto& hid : pool(pool_id).host_ids)
    if (hosts_.at(hid).role == HostRole::master) return hid;
  return std::nullopt;
}

std::vector<Id> PoolRegistry::up_hosts(const Id& pool_id) const {
  std::vector<Id> out;
  for (const auto& hid : pool(pool_id).host_ids)
    if (hosts_.at(hid).liveness == Liveness::up) out.push_back(hid);
  return out;
}

void PoolRegistry::elect_master(const Id& pool_id) {
  const auto& p = pool(pool_id);
  std::optional<Id> keep;
  std::optional<Id> lowest_up;
  for (const auto& hid : p.host_ids) {  // host_ids is sorted, first up host is the lowest Id
    const Host& h = hosts_.at(hid);
    if (h.liveness != Liveness::up) continue;
    if (!lowest_up) lowest_up = hid;
    if (h.role == HostRole::master && !keep) keep = hid;
  }
  const std::optional<Id> chosen = keep ? keep : lowest_up;
  for (const auto& hid : p.host_ids) hosts_.at(hid).role = (chosen && hid == *chosen) ? HostRole::master : HostRole::slave;
  if (!chosen) raise(ErrorCode::NoLiveHost, "no live host in pool " + pool_id.value);
}

SweepResult PoolRegistry::heartbeat_sweep(const Id& pool_id, SimTime now, int miss_limit, Duration interval) {
  if (miss_limit < 1) raise(ErrorCode::InvalidArgument, "miss_limit must be >= 1");
  SweepResult result;
  result.previous_master = master_of(pool_id);
  const Duration limit = interval * miss_limit;
  for (const auto& hid : pool(pool_id).host_ids) {
    Host& h = hosts_.at(hid);
    if (h.liveness == Liveness::down) continue;
    if (now - h.last_heartbeat > limit) {
      h.liveness = Liveness::down;
      h.role = HostRole::slave;
      result.newly_down.push_back(hid);
    }
  }
  if (!up_hosts(pool_id).empty()) elect_master(pool_id);
  result.master = master_of(pool_id);
  return result;
}

void PoolRegistry::heartbeat(const Id& host_id, SimTime now) {
  Host& h = mutable_host(host_id);
  if (now > h.last_heartbeat) h.last_heartbeat = now;
  if (h.liveness == Liveness::down) {
    h.liveness = Liveness::up;
    h.role = HostRole::slave;
    if (!master_of(h.pool_id)) elect_master(h.pool_id);
  }
}

void PoolRegistry::set_powered(const Id& host_id, bool powered) { mutable_host(host_id).powered = powered; }

void PoolRegistry::set_draining(const Id& host_id, bool draining) {
  Host& h = mutable_host(host_id);
  if (h.liveness == Liveness::down) raise(ErrorCode::HostDown, "host is down: " + host_id.value);
  h.liveness = draining ? Liveness::draining : Liveness::up;
  if (draining && h.role == HostRole::master) {
    h.role = HostRole::slave;
    if (!up_hosts(h.pool_id).empty()) elect_master(h.pool_id);
  } else if (!draining && !master_of(h.pool_id)) {
    elect_master(h.pool_id);
  }
}

bool PoolRegistry::fits(const Id& host_id, const ResourceSpec& spec) const {
  const Host& h = host(host_id);
  return deskcloud::fits(h, spec, pool(h.pool_id).overcommit_ratio);
}

void PoolRegistry::charge(const Id& host_id, const ResourceSpec& spec) {
  if (!fits(host_id, spec)) raise(ErrorCode::CapacityExceeded, "host lacks capacity: " + host_id.value);
  Host& h = mutable_host(host_id);
  h.used_vcpu += spec.vcpu;
  h.used_memory_gib += spec.memory_gib;
  h.used_disk_gib += spec.disk_gib;
}

void PoolRegistry::release(const Id& host_id, const ResourceSpec& spec) {
  Host& h = mutable_host(host_id);
  h.used_vcpu = std::max(0, h.used_vcpu - spec.vcpu);
  h.used_memory_gib = std::max<std::int64_t>(0, h.used_memory_gib - spec.memory_gib);
  h.used_disk_gib = std::max<std::int64_t>(0, h.used_disk_gib - spec.disk_gib);
}

Instance PoolRegistry::migrate(const Instance& instance, const Id& target_host) {
  if (instance.state != LifecycleState::Running)
    raise(ErrorCode::WrongState, "only Running instances migrate: " + instance.id.value);
  if (!instance.host_id) raise(ErrorCode::WrongState, "Running instance without host: " + instance.id.value);
  const Host& source = host(*instance.host_id);
  const Host& target = host(target_host);
  if (target.pool_id != source.pool_id)
    raise(ErrorCode::CrossPoolMigration, "target host is in another pool: " + target_host.value);
  if (target.liveness != Liveness::up) raise(ErrorCode::HostDown, "target host is not up: " + target_host.value);
  if (target_host == source.id) raise(ErrorCode::Conflict, "instance already runs on " + target_host.value);
  if (!fits(target_host, instance.spec))
    raise(ErrorCode::CapacityExceeded, "target host lacks capacity: " + target_host.value);

  Instance moving = transition(instance, LifecycleEvent::migrate_begin);
  moving.host_id = source.id;
  charge(target_host, instance.spec);
  release(source.id, instance.spec);
  Instance done = transition(moving, LifecycleEvent::migrate_end);
  done.host_id = target_host;
  return done;
}

void to_json(Json& j, const Host& h) {
  j = Json{{"id", h.id},
           {"name", h.name},
           {"site_id", h.site_id},
           {"pool_id", h.pool_id},
           {"vcpu_capacity", h.vcpu_capacity},
           {"memory_capacity_gib", h.memory_capacity_gib},
           {"disk_capacity_gib", h.disk_capacity_gib},
           {"role", h.role},
           {"liveness", h.liveness},
           {"last_heartbeat", h.last_heartbeat},
           {"powered", h.powered},
           {"used_vcpu", h.used_vcpu},
           {"used_memory_gib", h.used_memory_gib},
           {"used_disk_gib", h.used_disk_gib}};
}

void from_json(const Json& j, Host& h) {
  j.at("id").get_to(h.id);
  j.at("name").get_to(h.name);
  j.at("site_id").get_to(h.site_id);
  j.at("pool_id").get_to(h.pool_id);
  j.at("vcpu_capacity").get_to(h.vcpu_capacity);
  j.at("memory_capacity_gib").get_to(h.memory_capacity_gib);
  j.at("disk_capacity_gib").get_to(h.disk_capacity_gib);
  j.at("role").get_to(h.role);
  j.at("liveness").get_to(h.liveness);
  j.at("last_heartbeat").get_to(h.last_heartbeat);
  j.at("powered").get_to(h.powered);
  j.at("used_vcpu").get_to(h.used_vcpu);
  j.at("used_memory_gib").get_to(h.used_memory_gib);
  j.at("used_disk_gib").get_to(h.used_disk_gib);
}

void to_json(Json& j, const ServerPool& p) {
  j = Json{{"id", p.id},
           {"name", p.name},
           {"site_id", p.site_id},
           {"host_ids", p.host_ids},
           {"overcommit_ratio", p.overcommit_ratio}};
}

void from_json(const Json& j, ServerPool& p) {
  j.at("id").get_to(p.id);
  j.at("name").get_to(p.name);
  j.at("site_id").get_to(p.site_id);
  j.at("host_ids").get_to(p.host_ids);
  j.at("overcommit_ratio").get_to(p.overcommit_ratio);
}

void to_json(Json& j, const PoolRegistry& r) {
  Json hosts = Json::array();
  for (const auto& [_, h] : r.hosts_) hosts.push_back(h);
  Json pools = Json::array();
  for (const auto& [_, p] : r.pools_) pools.push_back(p);
  j = Json{{"hosts", std::move(hosts)}, {"pools", std::move(pools)}};
}

void from_json(const Json& j, PoolRegistry& r) {
  r.hosts_.clear();
  r.pools_.clear();
  for (const auto& p : j.at("pools")) {
    auto pool = p.get<ServerPool>();
    r.pools_.emplace(pool.id, std::move(pool));
  }
  for (const auto& h : j.at("hosts")) {
    auto host = h.get<Host>();
    r.hosts_.emplace(host.id, std::move(host));
  }
}

}  // namespace deskcloud
