#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "deskcloud/core/id.hpp"
#include "deskcloud/core/types.hpp"
#include "deskcloud/pool/pool.hpp"

namespace deskcloud {

struct HostView {
  Id host_id;
  Liveness liveness = Liveness::up;
  int vcpu_capacity = 0;
  int used_vcpu = 0;
  std::int64_t memory_capacity_gib = 0;
  std::int64_t used_memory_gib = 0;
  std::int64_t disk_capacity_gib = 0;
  std::int64_t used_disk_gib = 0;
  std::set<Id> affinity_groups;  // groups with a member currently on this host

  std::int64_t free_memory_gib() const { return memory_capacity_gib - used_memory_gib; }
};

struct PoolSnapshot {
  Id pool_id;
  double overcommit_ratio = 4.0;
  std::vector<HostView> hosts;  // sorted by host_id

  HostView* find(const Id& host_id);
  const HostView* find(const Id& host_id) const;
};

struct PlacementRequest {
  Id instance_id;
  ResourceSpec spec;
  Id farm_id;
  Id pool_id;
  std::optional<Id> anti_affinity_group;
  std::vector<Id> allowed_hosts;  // farm allotment; empty admits every host
};

struct PlacementDecision {
  Id instance_id;
  Id host_id;

  bool operator==(const PlacementDecision&) const = default;
};

bool fits(const HostView& host, const ResourceSpec& spec, double overcommit_ratio);

// Worst-fit by free memory, ties to the lowest host Id. Hosts already
// running a member of the request's anti-affinity group are tried last.
// Throws CapacityExhausted when no up, non-draining host fits.
PlacementDecision place(const PlacementRequest& request, const PoolSnapshot& snapshot);

// Charges a decision into the snapshot so the next request sees it.
void apply(PoolSnapshot& snapshot, const PlacementDecision& decision, const ResourceSpec& spec,
           const std::optional<Id>& anti_affinity_group = std::nullopt);

struct DrainItem {
  Id instance_id;
  ResourceSpec spec;
  std::optional<Id> anti_affinity_group;
};

// Relocation plan for every item on a draining host. Tries sequential
// worst-fit first and falls back to a bounded exact search; the returned
// moves can be applied in order without exceeding any host's capacity.
std::vector<PlacementDecision> plan_drain(const Id& host_id, const PoolSnapshot& snapshot,
                                          std::span<const DrainItem> items);

PoolSnapshot make_snapshot(const PoolRegistry& pools, const Id& pool_id, const std::map<Id, Instance>& instances);

}  // namespace deskcloud
