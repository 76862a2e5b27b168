#include <functional>

#include "doctest.h"

#include "deskcloud/core/error.hpp"
#include "deskcloud/sched/scheduler.hpp"
#include "support/gen.hpp"

using namespace deskcloud;

namespace {

HostView host(const std::string& id, int vcpu, std::int64_t mem, std::int64_t disk, Liveness l = Liveness::up) {
  HostView h;
  h.host_id = Id{id};
  h.liveness = l;
  h.vcpu_capacity = vcpu;
  h.memory_capacity_gib = mem;
  h.disk_capacity_gib = disk;
  return h;
}

bool oracle_fits(const HostView& h, const ResourceSpec& s, double ratio) {
  // Integer form of vcpu <= capacity * ratio for ratios that are multiples of 0.5.
  const auto twice = static_cast<std::int64_t>(ratio * 2);
  return 2 * static_cast<std::int64_t>(h.used_vcpu + s.vcpu) <= twice * h.vcpu_capacity &&
         h.used_memory_gib + s.memory_gib <= h.memory_capacity_gib && h.used_disk_gib + s.disk_gib <= h.disk_capacity_gib;
}

PoolSnapshot random_snapshot(testing::Gen& g, int hosts) {
  PoolSnapshot snap;
  snap.pool_id = Id{"P"};
  snap.overcommit_ratio = 0.5 * g.irange(2, 8);
  for (int i = 0; i < hosts; ++i) {
    const Liveness l = g.irange(0, 5) == 0 ? (g.coin() ? Liveness::down : Liveness::draining) : Liveness::up;
    auto h = host("H" + std::to_string(i), g.irange(2, 16), g.irange(8, 64), g.irange(50, 400), l);
    h.used_vcpu = g.irange(0, h.vcpu_capacity);
    h.used_memory_gib = g.irange(0, static_cast<int>(h.memory_capacity_gib));
    h.used_disk_gib = g.irange(0, static_cast<int>(h.disk_capacity_gib));
    if (g.irange(0, 3) == 0) h.affinity_groups.insert(Id{"G"});
    snap.hosts.push_back(h);
  }
  return snap;
}

ResourceSpec random_spec(testing::Gen& g) {
  return {g.irange(1, 12), g.irange(1, 40), g.irange(1, 200), 1};
}

}  // namespace

TEST_SUITE("scheduler") {
  TEST_CASE("worst fit by free memory with lowest id ties") {
    PoolSnapshot snap{Id{"P"}, 4.0, {host("A", 8, 64, 100), host("B", 8, 128, 100), host("C", 8, 128, 100)}};
    PlacementRequest req{Id{"I"}, {1, 4, 10, 1}, Id{"F"}, Id{"P"}, std::nullopt, {}};
    CHECK(place(req, snap).host_id == Id{"B"});
    apply(snap, place(req, snap), req.spec);
    CHECK(place(req, snap).host_id == Id{"C"});
  }

  TEST_CASE("anti-affinity hosts are used only as a last resort") {
    PoolSnapshot snap{Id{"P"}, 4.0, {host("A", 8, 128, 100), host("B", 8, 16, 100)}};
    snap.hosts[0].affinity_groups.insert(Id{"G"});
    PlacementRequest req{Id{"I"}, {1, 4, 10, 1}, Id{"F"}, Id{"P"}, Id{"G"}, {}};
    CHECK(place(req, snap).host_id == Id{"B"});
    req.spec.memory_gib = 32;
    CHECK(place(req, snap).host_id == Id{"A"});
  }

  TEST_CASE("allotment, liveness and capacity exhaustion") {
    PoolSnapshot snap{Id{"P"}, 1.0, {host("A", 2, 8, 10), host("B", 2, 8, 10, Liveness::draining), host("C", 2, 8, 10)}};
    PlacementRequest req{Id{"I"}, {2, 8, 10, 1}, Id{"F"}, Id{"P"}, std::nullopt, {Id{"C"}}};
    CHECK(place(req, snap).host_id == Id{"C"});
    req.spec.vcpu = 3;
    try {
      (void)place(req, snap);
      FAIL("expected CapacityExhausted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CapacityExhausted);
    }
  }

  TEST_CASE("property: placement agrees with a brute-force oracle") {
    testing::Gen g(42);
    for (int trial = 0; trial < 2000; ++trial) {
      PoolSnapshot snap = random_snapshot(g, g.irange(1, 6));
      PlacementRequest req{Id{"I"}, random_spec(g), Id{"F"}, Id{"P"}, std::nullopt, {}};
      if (g.coin()) req.anti_affinity_group = Id{"G"};
      if (g.irange(0, 3) == 0)
        for (const auto& h : snap.hosts)
          if (g.coin()) req.allowed_hosts.push_back(h.host_id);

      const HostView* expect = nullptr;
      int expect_rank = 0;
      for (const auto& h : snap.hosts) {
        if (h.liveness != Liveness::up || !oracle_fits(h, req.spec, snap.overcommit_ratio)) continue;
        if (!req.allowed_hosts.empty() &&
            std::find(req.allowed_hosts.begin(), req.allowed_hosts.end(), h.host_id) == req.allowed_hosts.end())
          continue;
        const int rank = req.anti_affinity_group && h.affinity_groups.contains(Id{"G"}) ? 0 : 1;
        if (!expect || rank > expect_rank ||
            (rank == expect_rank && (h.free_memory_gib() > expect->free_memory_gib() ||
                                     (h.free_memory_gib() == expect->free_memory_gib() && h.host_id < expect->host_id)))) {
          expect = &h;
          expect_rank = rank;
        }
      }
      if (expect) {
        CHECK(place(req, snap).host_id == expect->host_id);
      } else {
        CHECK_THROWS_AS(place(req, snap), Error);
      }
    }
  }

  TEST_CASE("property: sequential placement never overcommits") {
    testing::Gen g(7);
    for (int trial = 0; trial < 200; ++trial) {
      PoolSnapshot snap = random_snapshot(g, g.irange(1, 6));
      for (int k = 0; k < 12; ++k) {
        PlacementRequest req{Id{"I" + std::to_string(k)}, random_spec(g), Id{"F"}, Id{"P"}, std::nullopt, {}};
        try {
          apply(snap, place(req, snap), req.spec);
        } catch (const Error&) {
        }
      }
      for (const auto& h : snap.hosts) {
        CHECK(h.used_memory_gib <= std::max<std::int64_t>(h.memory_capacity_gib, 0));
        CHECK(h.used_disk_gib <= h.disk_capacity_gib);
      }
    }
  }

  TEST_CASE("property: drain planning is exact on small pools") {
    testing::Gen g(99);
    int feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 500; ++trial) {
      PoolSnapshot snap;
      snap.pool_id = Id{"P"};
      snap.overcommit_ratio = 1.0;
      const int n = g.irange(2, 4);
      for (int i = 0; i < n; ++i) {
        auto h = host("H" + std::to_string(i), 8, g.irange(4, 24), 1000);
        h.used_memory_gib = g.irange(0, 4);
        snap.hosts.push_back(h);
      }
      snap.hosts[0].liveness = Liveness::draining;
      std::vector<DrainItem> items;
      const int m = g.irange(1, 6);
      for (int k = 0; k < m; ++k) items.push_back({Id{"I" + std::to_string(k)}, {1, g.irange(1, 10), 1, 1}, std::nullopt});

      // Oracle: enumerate every assignment of items to up hosts.
      std::vector<std::int64_t> free;
      for (int i = 1; i < n; ++i) free.push_back(snap.hosts[static_cast<std::size_t>(i)].free_memory_gib());
      std::function<bool(std::size_t)> any = [&](std::size_t k) -> bool {
        if (k == items.size()) return true;
        for (auto& f : free) {
          if (f < items[k].spec.memory_gib) continue;
          f -= items[k].spec.memory_gib;
          const bool ok = any(k + 1);
          f += items[k].spec.memory_gib;
          if (ok) return true;
        }
        return false;
      };
      const bool exists = any(0);
      if (!exists) {
        ++infeasible;
        CHECK_THROWS_AS(plan_drain(Id{"H0"}, snap, items), Error);
        continue;
      }
      ++feasible;
      const auto plan = plan_drain(Id{"H0"}, snap, items);
      REQUIRE(plan.size() == items.size());
      PoolSnapshot work = snap;
      for (const auto& d : plan) {
        CHECK(d.host_id != Id{"H0"});
        const auto it = std::find_if(items.begin(), items.end(), [&](const DrainItem& x) { return x.instance_id == d.instance_id; });
        REQUIRE(it != items.end());
        CHECK(fits(*work.find(d.host_id), it->spec, work.overcommit_ratio));
        apply(work, d, it->spec);
      }
    }
    CHECK(feasible > 50);
    CHECK(infeasible > 50);
  }

  TEST_CASE("drain of a host that is not draining is rejected") {
    PoolSnapshot snap{Id{"P"}, 4.0, {host("A", 8, 64, 100), host("B", 8, 64, 100)}};
    std::vector<DrainItem> items{{Id{"I"}, {1, 1, 1, 1}, std::nullopt}};
    CHECK_THROWS_AS(plan_drain(Id{"A"}, snap, items), Error);
  }
}
