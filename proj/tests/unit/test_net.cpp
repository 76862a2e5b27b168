#include <set>

#include "doctest.h"

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/lifecycle.hpp"
#include "deskcloud/net/firewall.hpp"
#include "deskcloud/net/load_balancer.hpp"
#include "deskcloud/net/net_manager.hpp"
#include "support/gen.hpp"

using namespace deskcloud;

namespace {

NetworkPool make_pool(const std::string& id, const std::string& cidr, int vlan, std::optional<Id> farm = std::nullopt) {
  NetworkPool p;
  p.id = Id{id};
  p.name = id;
  p.site_id = Id{"S"};
  p.cidr = Cidr::parse(cidr);
  p.vlan_id = vlan;
  p.farm_id = farm;
  return p;
}

Instance requested(const std::string& id, int nets, const std::string& farm = "F") {
  Instance i;
  i.id = Id{id};
  i.farm_id = Id{farm};
  i.spec.network_count = nets;
  return i;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvariantViolation;
}

}  // namespace

TEST_SUITE("net") {
  TEST_CASE("ipv4 and cidr parsing") {
    CHECK(Ipv4::parse("10.1.2.3").value == 0x0A010203u);
    CHECK(Ipv4::parse("255.255.255.255").to_string() == "255.255.255.255");
    CHECK_THROWS_AS(Ipv4::parse("10.1.2"), Error);
    CHECK_THROWS_AS(Ipv4::parse("10.1.2.256"), Error);
    CHECK_THROWS_AS(Ipv4::parse("10..2.3"), Error);
    const Cidr c = Cidr::parse("192.168.4.0/24");
    CHECK(c.usable_count() == 253);
    CHECK_FALSE(c.is_usable(Ipv4::parse("192.168.4.0")));
    CHECK_FALSE(c.is_usable(Ipv4::parse("192.168.4.1")));
    CHECK_FALSE(c.is_usable(Ipv4::parse("192.168.4.255")));
    CHECK(c.is_usable(Ipv4::parse("192.168.4.2")));
    CHECK(c.is_usable(Ipv4::parse("192.168.4.254")));
    CHECK_THROWS_AS(Cidr::parse("192.168.4.1/24"), Error);
    CHECK(Cidr::parse("10.0.0.0/8").overlaps(Cidr::parse("10.200.0.0/16")));
    CHECK_FALSE(Cidr::parse("10.0.0.0/24").overlaps(Cidr::parse("10.0.1.0/24")));
  }

  TEST_CASE("pool admission rejects overlaps and duplicate vlans") {
    NetManager n;
    n.add_pool(make_pool("A", "10.0.0.0/24", 100));
    CHECK(code_of([&] { n.add_pool(make_pool("B", "10.0.0.128/25", 101)); }) == ErrorCode::Conflict);
    CHECK(code_of([&] { n.add_pool(make_pool("B", "10.0.1.0/24", 100)); }) == ErrorCode::Conflict);
    CHECK(code_of([&] { n.add_pool(make_pool("B", "10.0.1.0/24", 99)); }) == ErrorCode::InvalidArgument);
    n.add_pool(make_pool("B", "10.0.1.0/24", 101));
  }

  TEST_CASE("allocation is lowest-free and exhausts at usable_count") {
    NetManager n;
    n.add_pool(make_pool("A", "10.0.0.0/29", 100));
    std::vector<Ipv4> got;
    for (int i = 0; i < 5; ++i) got.push_back(n.allocate(Id{"A"}));
    CHECK(got.front().to_string() == "10.0.0.2");
    CHECK(got.back().to_string() == "10.0.0.6");
    CHECK(code_of([&] { n.allocate(Id{"A"}); }) == ErrorCode::PoolExhausted);
    n.release(Id{"A"}, Ipv4::parse("10.0.0.4"));
    CHECK(n.allocate(Id{"A"}).to_string() == "10.0.0.4");
  }

  TEST_CASE("attribute_networks is all-or-nothing and honours isolation") {
    NetManager n;
    n.add_pool(make_pool("A", "10.0.0.0/29", 100));
    n.add_pool(make_pool("X", "10.9.0.0/24", 101, Id{"OTHER"}));
    const Id a{"A"}, x{"X"};
    std::vector<Id> pools{a, x};
    CHECK(code_of([&] { n.attribute_networks(requested("I1", 2), pools); }) == ErrorCode::CrossFarmNetwork);
    CHECK(n.pool(a).allocated.empty());
    std::vector<Id> six(6, a);
    CHECK(code_of([&] { n.attribute_networks(requested("I1", 6), six); }) == ErrorCode::PoolExhausted);
    CHECK(n.pool(a).allocated.empty());
    std::vector<Id> two(2, a);
    const auto out = n.attribute_networks(requested("I1", 2), two);
    CHECK(out.size() == 2);
    CHECK(out[0].mac != out[1].mac);
    CHECK(code_of([&] { n.attribute_networks(requested("I1", 2), two); }) == ErrorCode::Conflict);
    n.release_instance(Id{"I1"});
    CHECK(n.pool(a).allocated.empty());
    CHECK(n.assignments_of(Id{"I1"}).empty());
  }

  TEST_CASE("macs carry the oui and are deterministic") {
    NetManager a, b;
    const Mac m = a.derive_mac(Id{"inst"}, 0);
    CHECK(m == b.derive_mac(Id{"inst"}, 0));
    CHECK((m.value >> 24) == 0x02dc00u);
    CHECK(m.to_string().rfind("02:dc:00:", 0) == 0);
    CHECK(m != a.derive_mac(Id{"inst"}, 1));
  }

  TEST_CASE("property: random allocate/release keeps addresses unique and usable") {
    testing::Gen g(5);
    for (int trial = 0; trial < 20; ++trial) {
      NetManager n;
      n.add_pool(make_pool("A", "10.1.0.0/26", 100));
      n.add_pool(make_pool("B", "10.2.0.0/27", 101));
      std::set<Id> live;
      int counter = 0;
      for (int step = 0; step < 500; ++step) {
        if (live.empty() || g.coin(0.6)) {
          const int nets = g.irange(1, 3);
          std::vector<Id> pools;
          for (int k = 0; k < nets; ++k) pools.push_back(g.coin() ? Id{"A"} : Id{"B"});
          const Instance inst = requested("I" + std::to_string(counter++), nets);
          std::uint64_t free_a = n.pool(Id{"A"}).free_count(), free_b = n.pool(Id{"B"}).free_count();
          const auto need_a = static_cast<std::uint64_t>(std::count(pools.begin(), pools.end(), Id{"A"}));
          const bool should_fit = need_a <= free_a && pools.size() - need_a <= free_b;
          try {
            n.attribute_networks(inst, pools);
            CHECK(should_fit);
            live.insert(inst.id);
          } catch (const Error& e) {
            CHECK_FALSE(should_fit);
            CHECK(e.code() == ErrorCode::PoolExhausted);
          }
        } else {
          std::vector<Id> v(live.begin(), live.end());
          const Id victim = g.pick(v);
          n.release_instance(victim);
          live.erase(victim);
        }
        std::set<std::uint32_t> ips;
        std::set<std::uint64_t> macs;
        std::size_t total = 0;
        for (const auto& [_, as] : n.assignments())
          for (const auto& a : as) {
            ++total;
            ips.insert(a.ip.value);
            macs.insert(a.mac.value);
            CHECK(n.pool(a.pool_id).cidr.is_usable(a.ip));
          }
        CHECK(ips.size() == total);
        CHECK(macs.size() == total);
        CHECK(n.pool(Id{"A"}).allocated.size() + n.pool(Id{"B"}).allocated.size() == total);
      }
    }
  }

  TEST_CASE("property: firewall first match agrees with a brute-force scan") {
    testing::Gen g(13);
    const Protocol protos[] = {Protocol::tcp, Protocol::udp, Protocol::icmp, Protocol::any};
    const char* cidrs[] = {"0.0.0.0/0", "10.0.0.0/8", "10.1.0.0/16", "192.168.0.0/24", "10.1.2.3/32"};
    const char* ips[] = {"10.1.2.3", "10.1.9.9", "10.200.0.1", "192.168.0.7", "8.8.8.8"};
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<FirewallRule> rules;
      const int n = g.irange(0, 6);
      for (int k = 0; k < n; ++k) {
        FirewallRule r;
        r.id = Id{"R" + std::to_string(k)};
        r.protocol = protos[g.irange(0, 3)];
        const int lo = g.irange(0, 100);
        r.ports = {lo, lo + g.irange(0, 50)};
        r.remote_cidr = Cidr::parse(cidrs[g.irange(0, 4)]);
        r.action = g.coin() ? RuleAction::allow : RuleAction::deny;
        r.priority = k * 10;
        rules.push_back(r);
      }
      Packet p{protos[g.irange(0, 2)], g.irange(0, 160), Ipv4::parse(ips[g.irange(0, 4)])};
      RuleAction expect = RuleAction::deny;
      for (const auto& r : rules) {
        const bool proto_ok = r.protocol == Protocol::any || r.protocol == p.protocol;
        const bool port_ok = p.protocol == Protocol::icmp || (p.port >= r.ports.low && p.port <= r.ports.high);
        const std::uint32_t mask = r.remote_cidr.prefix == 0 ? 0 : ~std::uint32_t{0} << (32 - r.remote_cidr.prefix);
        const bool ip_ok = (p.remote_ip.value & mask) == r.remote_cidr.base.value;
        if (proto_ok && port_ok && ip_ok) {
          expect = r.action;
          break;
        }
      }
      CHECK(evaluate_firewall(rules, p) == expect);
    }
  }

  TEST_CASE("firewall priorities are unique per scope") {
    NetManager n;
    FirewallRule r;
    r.id = Id{"R1"};
    r.scope_id = Id{"I"};
    r.remote_cidr = Cidr::parse("0.0.0.0/0");
    n.add_firewall_rule(r);
    r.id = Id{"R2"};
    CHECK(code_of([&] { n.add_firewall_rule(r); }) == ErrorCode::Conflict);
    r.ports = {10, 5};
    r.priority = 1;
    CHECK(code_of([&] { n.add_firewall_rule(r); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("load balancer picks among live backends") {
    LbRule rule;
    rule.id = Id{"L"};
    rule.backend_instance_ids = {Id{"c"}, Id{"a"}, Id{"b"}};
    std::vector<Id> live{Id{"a"}, Id{"b"}, Id{"c"}};
    CHECK(lb_pick(rule, 0, live) == Id{"a"});
    CHECK(lb_pick(rule, 1, live) == Id{"b"});
    CHECK(lb_pick(rule, 5, live) == Id{"c"});
    std::vector<Id> some{Id{"c"}, Id{"z"}};
    CHECK(lb_pick(rule, 7, some) == Id{"c"});
    rule.algorithm = LbAlgorithm::least_assignments;
    rule.pick_counts = {{Id{"a"}, 3}, {Id{"b"}, 1}, {Id{"c"}, 1}};
    CHECK(lb_pick(rule, 0, live) == Id{"b"});
    std::vector<Id> none;
    CHECK(code_of([&] { (void)lb_pick(rule, 0, none); }) == ErrorCode::NoLiveBackend);
  }
}
