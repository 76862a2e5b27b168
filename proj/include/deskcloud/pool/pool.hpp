#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deskcloud/core/clock.hpp"
#include "deskcloud/core/id.hpp"
#include "deskcloud/core/json_support.hpp"
#include "deskcloud/core/types.hpp"

namespace deskcloud {

enum class HostRole { master, slave };
enum class Liveness { up, down, draining };

template <>
struct EnumNames<HostRole> {
  static constexpr std::array<std::pair<HostRole, std::string_view>, 2> names{{
      {HostRole::master, "master"}, {HostRole::slave, "slave"}}};
};
template <>
struct EnumNames<Liveness> {
  static constexpr std::array<std::pair<Liveness, std::string_view>, 3> names{{
      {Liveness::up, "up"}, {Liveness::down, "down"}, {Liveness::draining, "draining"}}};
};

struct Host {
  Id id;
  std::string name;
  Id site_id;
  Id pool_id;
  int vcpu_capacity = 1;
  std::int64_t memory_capacity_gib = 1;
  std::int64_t disk_capacity_gib = 1;
  HostRole role = HostRole::slave;
  Liveness liveness = Liveness::up;
  SimTime last_heartbeat{};
  // Simulator truth: a powered-off host stops heartbeating but the control
  // plane only learns about it through the sweep.
  bool powered = true;
  int used_vcpu = 0;
  std::int64_t used_memory_gib = 0;
  std::int64_t used_disk_gib = 0;
};

struct ServerPool {
  Id id;
  std::string name;
  Id site_id;
  std::vector<Id> host_ids;  // kept sorted
  double overcommit_ratio = 4.0;
};

struct SweepResult {
  std::vector<Id> newly_down;
  std::optional<Id> previous_master;
  std::optional<Id> master;

  bool master_changed() const { return previous_master != master; }
};

bool fits(const Host& host, const ResourceSpec& spec, double overcommit_ratio);

class PoolRegistry {
 public:
  void add_pool(ServerPool pool);
  void add_host(Host host);

  const Host& host(const Id& id) const;
  const ServerPool& pool(const Id& id) const;
  bool has_host(const Id& id) const { return hosts_.contains(id); }
  bool has_pool(const Id& id) const { return pools_.contains(id); }
  const std::map<Id, Host>& hosts() const { return hosts_; }
  const std::map<Id, ServerPool>& pools() const { return pools_; }

  // Keeps a live master, otherwise promotes the up host with the lowest Id.
  // Throws NoLiveHost when no host of the pool is up.
  void elect_master(const Id& pool_id);

  // Marks hosts whose last heartbeat is older than miss_limit * interval as
  // down and re-elects if the master was among them.
  SweepResult heartbeat_sweep(const Id& pool_id, SimTime now, int miss_limit, Duration interval);

  // A heartbeat from a down host brings it back as an up slave.
  void heartbeat(const Id& host_id, SimTime now);

  void set_powered(const Id& host_id, bool powered);
  void set_draining(const Id& host_id, bool draining);

  std::optional<Id> master_of(const Id& pool_id) const;
  std::vector<Id> up_hosts(const Id& pool_id) const;

  bool fits(const Id& host_id, const ResourceSpec& spec) const;
  void charge(const Id& host_id, const ResourceSpec& spec);
  void release(const Id& host_id, const ResourceSpec& spec);

  // Moves a Running instance to another up host of the same pool. The target
  // is charged before the source is released so the spec is never charged
  // to zero hosts.
  Instance migrate(const Instance& instance, const Id& target_host);

  friend void to_json(Json& j, const PoolRegistry& r);
  friend void from_json(const Json& j, PoolRegistry& r);

 private:
  Host& mutable_host(const Id& id);

  std::map<Id, Host> hosts_;
  std::map<Id, ServerPool> pools_;
};

void to_json(Json& j, const Host& h);
void from_json(const Json& j, Host& h);
void to_json(Json& j, const ServerPool& p);
void from_json(const Json& j, ServerPool& p);

}  // namespace deskcloud
