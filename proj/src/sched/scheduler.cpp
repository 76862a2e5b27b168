#include "deskcloud/sched/scheduler.hpp"

#include <algorithm>
#include <functional>

namespace deskcloud {

namespace {

constexpr std::size_t kExactSearchBudget = 2'000'000;

bool allowed(const PlacementRequest& r, const Id& host) {
  return r.allowed_hosts.empty() || std::find(r.allowed_hosts.begin(), r.allowed_hosts.end(), host) != r.allowed_hosts.end();
}

void charge(HostView& h, const ResourceSpec& spec) {
  h.used_vcpu += spec.vcpu;
  h.used_memory_gib += spec.memory_gib;
  h.used_disk_gib += spec.disk_gib;
}

void uncharge(HostView& h, const ResourceSpec& spec) {
  h.used_vcpu -= spec.vcpu;
  h.used_memory_gib -= spec.memory_gib;
  h.used_disk_gib -= spec.disk_gib;
}

}  // namespace

HostView* PoolSnapshot::find(const Id& host_id) {
  auto it = std::find_if(hosts.begin(), hosts.end(), [&](const HostView& h) { return h.host_id == host_id; });
  return it == hosts.end() ? nullptr : &*it;
}

const HostView* PoolSnapshot::find(const Id& host_id) const {
  return const_cast<PoolSnapshot*>(this)->find(host_id);
}

bool fits(const HostView& host, const ResourceSpec& spec, double overcommit_ratio) {
  return static_cast<double>(host.used_vcpu + spec.vcpu) <= static_cast<double>(host.vcpu_capacity) * overcommit_ratio &&
         host.used_memory_gib + spec.memory_gib <= host.memory_capacity_gib &&
         host.used_disk_gib + spec.disk_gib <= host.disk_capacity_gib;
}

PlacementDecision place(const PlacementRequest& request, const PoolSnapshot& snapshot) {
  validate(request.spec);
  const HostView* best = nullptr;
  bool best_conflicts = true;
  for (const auto& h : snapshot.hosts) {
    if (h.liveness != Liveness::up || !allowed(request, h.host_id)) continue;
    if (!fits(h, request.spec, snapshot.overcommit_ratio)) continue;
    const bool conflicts = request.anti_affinity_group && h.affinity_groups.contains(*request.anti_affinity_group);
    if (!best) {
      best = &h;
      best_conflicts = conflicts;
      continue;
    }
    if (conflicts != best_conflicts) {
      if (!conflicts) {
        best = &h;
        best_conflicts = false;
      }
      continue;
    }
    if (h.free_memory_gib() > best->free_memory_gib() ||
        (h.free_memory_gib() == best->free_memory_gib() && h.host_id < best->host_id))
      best = &h;
  }
  if (!best) raise(ErrorCode::CapacityExhausted, "no feasible host for instance " + request.instance_id.value);
  return {request.instance_id, best->host_id};
}

void apply(PoolSnapshot& snapshot, const PlacementDecision& decision, const ResourceSpec& spec,
           const std::optional<Id>& anti_affinity_group) {
  HostView* h = snapshot.find(decision.host_id);
  if (!h) raise(ErrorCode::NotFound, "host not in snapshot: " + decision.host_id.value);
  charge(*h, spec);
  if (anti_affinity_group) h->affinity_groups.insert(*anti_affinity_group);
}

std::vector<PlacementDecision> plan_drain(const Id& host_id, const PoolSnapshot& snapshot,
                                          std::span<const DrainItem> items) {
  const HostView* draining = snapshot.find(host_id);
  if (!draining) raise(ErrorCode::NotFound, "host not in snapshot: " + host_id.value);
  if (draining->liveness != Liveness::draining) raise(ErrorCode::WrongState, "host is not draining: " + host_id.value);
  if (items.empty()) return {};

  std::vector<DrainItem> order(items.begin(), items.end());
  std::stable_sort(order.begin(), order.end(), [](const DrainItem& a, const DrainItem& b) {
    if (a.spec.memory_gib != b.spec.memory_gib) return a.spec.memory_gib > b.spec.memory_gib;
    if (a.spec.vcpu != b.spec.vcpu) return a.spec.vcpu > b.spec.vcpu;
    return a.instance_id < b.instance_id;
  });

  // Sequential worst-fit.
  {
    PoolSnapshot work = snapshot;
    std::vector<PlacementDecision> plan;
    bool ok = true;
    for (const auto& item : order) {
      PlacementRequest req{item.instance_id, item.spec, {}, snapshot.pool_id, item.anti_affinity_group, {}};
      try {
        auto d = place(req, work);
        apply(work, d, item.spec, item.anti_affinity_group);
        plan.push_back(d);
      } catch (const Error&) {
        ok = false;
        break;
      }
    }
    if (ok) return plan;
  }

  // Exact depth-first search over host choices, largest items first.
  PoolSnapshot work = snapshot;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < work.hosts.size(); ++i)
    if (work.hosts[i].liveness == Liveness::up) targets.push_back(i);
  std::vector<std::size_t> chosen(order.size());
  std::size_t visited = 0;
  std::function<bool(std::size_t)> search = [&](std::size_t k) -> bool {
    if (k == order.size()) return true;
    for (std::size_t t : targets) {
      if (++visited > kExactSearchBudget) return false;
      HostView& h = work.hosts[t];
      if (!fits(h, order[k].spec, work.overcommit_ratio)) continue;
      charge(h, order[k].spec);
      chosen[k] = t;
      if (search(k + 1)) return true;
      uncharge(h, order[k].spec);
    }
    return false;
  };
  if (!search(0))
    raise(ErrorCode::DrainInfeasible, "no capacity-feasible relocation for host " + host_id.value);
  std::vector<PlacementDecision> plan;
  for (std::size_t k = 0; k < order.size(); ++k) plan.push_back({order[k].instance_id, work.hosts[chosen[k]].host_id});
  return plan;
}

PoolSnapshot make_snapshot(const PoolRegistry& pools, const Id& pool_id, const std::map<Id, Instance>& instances) {
  const ServerPool& pool = pools.pool(pool_id);
  PoolSnapshot snap;
  snap.pool_id = pool_id;
  snap.overcommit_ratio = pool.overcommit_ratio;
  for (const auto& hid : pool.host_ids) {
    const Host& h = pools.host(hid);
    snap.hosts.push_back(HostView{h.id, h.liveness, h.vcpu_capacity, h.used_vcpu, h.memory_capacity_gib,
                                  h.used_memory_gib, h.disk_capacity_gib, h.used_disk_gib, {}});
  }
  for (const auto& [_, inst] : instances) {
    if (!inst.host_id || !inst.anti_affinity_group) continue;
    if (HostView* h = snap.find(*inst.host_id)) h->affinity_groups.insert(*inst.anti_affinity_group);
  }
  return snap;
}

}  // namespace deskcloud
