#include "deskcloud/control/invariants.hpp"

#include <algorithm>
#include <set>

namespace deskcloud {

namespace {

struct Checker {
  const ControlState& s;
  std::vector<Violation> out;

  void fail(const char* name, std::string detail) { out.push_back({name, std::move(detail)}); }

  void host_ledger() {
    std::map<Id, ResourceSpec> charged;
    for (const auto& [id, inst] : s.instances) {
      if (holds_host(inst.state) != inst.host_id.has_value()) {
        fail("host_presence", "instance " + id.value + " in " + std::string(enum_name(inst.state)) +
                                  (inst.host_id ? " holds a host" : " holds no host"));
        continue;
      }
      if (!inst.host_id) continue;
      if (!s.pools.has_host(*inst.host_id)) {
        fail("host_presence", "instance " + id.value + " on unknown host " + inst.host_id->value);
        continue;
      }
      if (s.pools.host(*inst.host_id).liveness == Liveness::down)
        fail("host_presence", "instance " + id.value + " still hosted on down host " + inst.host_id->value);
      auto& c = charged.try_emplace(*inst.host_id, ResourceSpec{0, 0, 0, 0}).first->second;
      c.vcpu += inst.spec.vcpu;
      c.memory_gib += inst.spec.memory_gib;
      c.disk_gib += inst.spec.disk_gib;
    }
    for (const auto& [hid, h] : s.pools.hosts()) {
      ResourceSpec c{0, 0, 0, 0};
      if (auto it = charged.find(hid); it != charged.end()) c = it->second;
      if (c.vcpu != h.used_vcpu || c.memory_gib != h.used_memory_gib || c.disk_gib != h.used_disk_gib)
        fail("host_ledger", "host " + hid.value + " usage does not match its instances");
      const double ratio = s.pools.pool(h.pool_id).overcommit_ratio;
      if (static_cast<double>(h.used_vcpu) > h.vcpu_capacity * ratio || h.used_memory_gib > h.memory_capacity_gib ||
          h.used_disk_gib > h.disk_capacity_gib)
        fail("host_capacity", "host " + hid.value + " over capacity");
    }
  }

  void mastership() {
    for (const auto& [pid, p] : s.pools.pools()) {
      int masters = 0, up = 0;
      for (const auto& hid : p.host_ids) {
        const Host& h = s.pools.host(hid);
        if (h.liveness == Liveness::up) ++up;
        if (h.role == HostRole::master) {
          ++masters;
          if (h.liveness != Liveness::up) fail("single_master", "master " + hid.value + " is not up");
        }
      }
      if (up > 0 && masters != 1)
        fail("single_master", "pool " + pid.value + " has " + std::to_string(masters) + " masters");
      if (up == 0 && masters != 0) fail("single_master", "pool " + pid.value + " has a master but no up host");
    }
  }

  void networks() {
    std::map<Id, std::set<std::uint32_t>> ips;
    std::set<std::uint64_t> macs;
    for (const auto& [iid, list] : s.net.assignments()) {
      auto inst = s.instances.find(iid);
      if (inst == s.instances.end() || inst->second.state == LifecycleState::Destroyed) {
        fail("assignment_gc", "network assignment for missing or destroyed instance " + iid.value);
        continue;
      }
      for (const auto& a : list) {
        const NetworkPool& p = s.net.pool(a.pool_id);
        if (!ips[a.pool_id].insert(a.ip.value).second)
          fail("ip_unique", "duplicate " + a.ip.to_string() + " in pool " + a.pool_id.value);
        if (!p.allocated.contains(a.ip.value) || !p.cidr.is_usable(a.ip))
          fail("ip_unique", a.ip.to_string() + " assigned but not allocated in " + a.pool_id.value);
        if (!macs.insert(a.mac.value).second) fail("mac_unique", "duplicate MAC " + a.mac.to_string());
        if (p.farm_id && *p.farm_id != inst->second.farm_id)
          fail("isolation", "instance " + iid.value + " joined isolated pool " + a.pool_id.value);
      }
    }
    for (const auto& [pid, p] : s.net.pools()) {
      const auto& used = ips[pid];
      if (used.size() != p.allocated.size())
        fail("ip_unique", "pool " + pid.value + " allocations do not match assignments");
    }
  }

  void farms() {
    for (const auto& [fid, f] : s.farms) {
      if (live_instance_count(s, fid) > static_cast<std::size_t>(f.quota.max_instances))
        fail("quota", "farm " + fid.value + " exceeds max_instances");
      if (s.objects.farm_usage_bytes(fid) > f.quota.object_quota_gib * kGiB)
        fail("quota", "farm " + fid.value + " exceeds object quota");
      if (farm_block_usage_gib(s, fid) > f.quota.block_quota_gib)
        fail("quota", "farm " + fid.value + " exceeds block quota");
      if (f.share.used_gib > f.share.quota_gib) fail("quota", "farm " + fid.value + " share over quota");
      const auto& allot = f.active_allotment();
      for (const auto& [iid, inst] : s.instances)
        if (inst.farm_id == fid && inst.host_id &&
            std::find(allot.begin(), allot.end(), *inst.host_id) == allot.end())
          fail("allotment", "instance " + iid.value + " runs outside its farm allotment");
      for (const auto& [iid, _] : f.remote_access) {
        auto inst = s.instances.find(iid);
        if (inst == s.instances.end() || inst->second.state == LifecycleState::Destroyed)
          fail("remote_access_gc", "remote access record for gone instance " + iid.value);
      }
    }
    // Distinct farms may share a VLAN id only on different sites.
    std::map<std::pair<Id, int>, Id> vlan_owner;
    for (const auto& [fid, f] : s.farms)
      for (int v : f.vlan_ids) {
        auto [it, inserted] = vlan_owner.emplace(std::make_pair(f.primary_site, v), fid);
        if (!inserted) fail("isolation", "VLAN " + std::to_string(v) + " shared by farms " + it->second.value + " and " + fid.value);
      }
  }

  void objects() {
    const int rf = s.objects.policy().replication_factor;
    for (const auto& [key, obj] : s.objects.objects()) {
      std::set<Id> distinct(obj.replica_nodes.begin(), obj.replica_nodes.end());
      if (distinct.size() != obj.replica_nodes.size()) fail("replicas", "duplicate replica node for " + key);
      if (static_cast<int>(obj.replica_nodes.size()) > rf) fail("replicas", "too many replicas for " + key);
      if (obj.replica_nodes.empty()) fail("replicas", "object without replicas: " + key);
    }
  }

  void dr() {
    for (const auto& [vid, v] : s.blocks.volumes()) {
      if (!v.replicated || v.lost || !v.peer_connected) continue;
      if (v.mode == ReplicationMode::sync) {
        if (v.peer_journal != v.journal) fail("dr_sync", "volume " + vid.value + " peer journal diverges");
      } else {
        std::vector<JournalEntry> merged = v.peer_journal;
        merged.insert(merged.end(), v.pending.begin(), v.pending.end());
        if (merged != v.journal) fail("dr_async", "volume " + vid.value + " peer plus queue differs from journal");
      }
    }
    std::set<Id> seen;
    for (const auto& [sid, site] : s.sites) {
      if (!site.peer_site || seen.contains(sid)) continue;
      auto peer = s.sites.find(*site.peer_site);
      if (peer == s.sites.end()) {
        fail("one_active_site", "site " + sid.value + " names unknown peer");
        continue;
      }
      seen.insert(sid);
      seen.insert(peer->first);
      const int active = (site.status == SiteStatus::active) + (peer->second.status == SiteStatus::active);
      if (active != 1) fail("one_active_site", "site pair " + sid.value + "/" + peer->first.value + " has " + std::to_string(active) + " active");
    }
  }
};

}  // namespace

std::vector<Violation> check_invariants(const ControlState& state) {
  Checker c{state, {}};
  c.host_ledger();
  c.mastership();
  c.networks();
  c.farms();
  c.objects();
  c.dr();
  return std::move(c.out);
}

void to_json(Json& j, const Violation& v) { j = Json{{"invariant", v.invariant}, {"detail", v.detail}}; }

}  // namespace deskcloud
