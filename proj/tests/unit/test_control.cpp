#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "deskcloud/control/config.hpp"
#include "deskcloud/control/control_plane.hpp"
#include "deskcloud/control/invariants.hpp"
#include "deskcloud/core/error.hpp"
#include "support/world.hpp"

using namespace deskcloud;
using deskcloud::testing::make_world;
using deskcloud::testing::WorldOptions;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvariantViolation;
}

std::string state_of(testing::World& w, const Id& inst) {
  return w.cp->query("instance", {{"id", inst}}, w.admin).at("state").get<std::string>();
}

}  // namespace

TEST_SUITE("control") {
  TEST_CASE("provision places, attributes and starts within the allotment") {
    auto w = make_world();
    w.cp->set_step_checks(true);
    const auto ids = w.provision(w.admin, 6);
    const Json farm = w.cp->query("farm", {{"id", w.farm}}, w.admin);
    const auto allot = farm.at("allotted_hosts").get<std::vector<Id>>();
    for (const auto& id : ids) {
      const Json inst = w.cp->query("instance", {{"id", id}}, w.admin);
      CHECK(inst.at("state") == "Running");
      CHECK(std::find(allot.begin(), allot.end(), inst.at("host_id").get<Id>()) != allot.end());
      CHECK(inst.at("networks").size() == 1);
    }
    CHECK(farm.at("usage").at("instances") == 6);
    CHECK(w.cp->step_violations().empty());
    CHECK(check_invariants(w.cp->state()).empty());
  }

  TEST_CASE("worst-fit spreads instances over the farm hosts") {
    auto w = make_world();
    w.provision(w.admin, 8);
    for (const auto& h : w.hosts) CHECK(w.cp->state().pools.host(h).used_vcpu == 4);
  }

  TEST_CASE("failed commands roll back completely") {
    WorldOptions o;
    o.hosts = 1;
    o.farm_hosts = 1;
    o.memory_gib = 16;
    auto w = make_world(o);
    const std::string before = w.cp->digest();
    const auto journal = w.cp->journal().size();
    CHECK(code_of([&] { w.provision(w.admin, 5); }) == ErrorCode::CapacityExhausted);
    CHECK(w.cp->digest() == before);
    CHECK(w.cp->journal().size() == journal);
    CHECK(w.cp->state().instances.empty());
    CHECK(w.cp->state().net.assignments().empty());
    CHECK(code_of([&] { w.provision(w.admin, 65); }) == ErrorCode::QuotaExceeded);
    CHECK(code_of([&] { w.sys("no.such", Json::object()); }) == ErrorCode::MalformedCommand);
    CHECK(code_of([&] { w.sys("host.add", Json::array()); }) == ErrorCode::MalformedCommand);
    CHECK(w.cp->digest() == before);
  }

  TEST_CASE("401 for missing or bad tokens, 403 for wrong role or owner") {
    auto w = make_world();
    CHECK(code_of([&] { w.as("", "instance.provision", {{"farm_id", w.farm}, {"template_id", w.tmpl}}); }) ==
          ErrorCode::Unauthorized);
    CHECK(code_of([&] { w.as("dct_bogus", "site.create", {{"name", "x"}}); }) == ErrorCode::Unauthorized);
    CHECK(code_of([&] { (void)w.cp->query("farms", {}, "nope"); }) == ErrorCode::Unauthorized);
    CHECK(code_of([&] { w.cp->login("admin", "wrong"); }) == ErrorCode::BadCredential);
    CHECK(code_of([&] { w.cp->login("ghost", "x"); }) == ErrorCode::UnknownUser);

    const std::string user = w.user("ursula").second;
    const std::string outsider = w.user("otto", Role::user, true).second;
    const std::string other = w.user("vera").second;
    CHECK(code_of([&] { w.as(user, "site.create", {{"name", "x"}, {"role", "primary"}}); }) == ErrorCode::Forbidden);
    CHECK(code_of([&] { w.provision(outsider, 1); }) == ErrorCode::Forbidden);
    const auto mine = w.provision(user, 1);
    CHECK(code_of([&] { w.as(other, "instance.stop", {{"instance_id", mine[0]}}); }) == ErrorCode::Forbidden);
    w.as(user, "instance.stop", {{"instance_id", mine[0]}});
    CHECK(state_of(w, mine[0]) == "Stopped");
    // Any authenticated user may view.
    CHECK(w.cp->query("instances", {}, outsider).size() == 1);
  }

  TEST_CASE("a narrowed token cannot reach other surfaces") {
    auto w = make_world();
    const std::string img = w.cp->login("admin", "admin", std::set<Surface>{Surface::image}).at("token").get<std::string>();
    CHECK_NOTHROW((void)w.cp->query("templates", {}, img));
    CHECK(code_of([&] { (void)w.cp->query("farms", {}, img); }) == ErrorCode::Forbidden);
    CHECK(code_of([&] { w.as(img, "sim.tick", {{"ms", 1}}); }) == ErrorCode::Forbidden);
  }

  TEST_CASE("tokens expire on the simulated clock") {
    WorldOptions o;
    o.config = {{"auth.token_ttl_ms", "10000"}};
    auto w = make_world(o);
    const std::string t = w.cp->login("admin", "admin").at("token").get<std::string>();
    w.sys("sim.tick", {{"ms", 9999}});
    CHECK_NOTHROW((void)w.cp->query("farms", {}, t));
    w.sys("sim.tick", {{"ms", 1}});
    CHECK(code_of([&] { (void)w.cp->query("farms", {}, t); }) == ErrorCode::Unauthorized);
  }

  TEST_CASE("lifecycle through the command surface") {
    auto w = make_world();
    const auto ids = w.provision(w.admin, 1, {{"start", false}});
    const Id i = ids[0];
    CHECK(state_of(w, i) == "Attributed");
    w.sys("instance.start", {{"instance_id", i}});
    CHECK(code_of([&] { w.sys("instance.destroy", {{"instance_id", i}}); }) == ErrorCode::IllegalTransition);
    const Id from = w.cp->state().instances.at(i).host_id.value();
    const Json moved = w.sys("instance.migrate", {{"instance_id", i}});
    CHECK(moved.at("host_id").get<Id>() != from);
    CHECK(moved.at("state") == "Running");
    w.sys("instance.stop", {{"instance_id", i}});
    CHECK(code_of([&] { w.sys("instance.migrate", {{"instance_id", i}}); }) == ErrorCode::IllegalTransition);
    w.sys("instance.destroy", {{"instance_id", i}});
    CHECK(state_of(w, i) == "Destroyed");
    CHECK(w.cp->state().net.assignments_of(i).empty());
    for (const auto& h : w.hosts) CHECK(w.cp->state().pools.host(h).used_vcpu == 0);
  }

  TEST_CASE("template overrides may only lower and are copied") {
    auto w = make_world();
    const auto ids = w.provision(w.admin, 1, {{"overrides", {{"vcpu", 1}}}});
    CHECK(w.cp->state().instances.at(ids[0]).spec.vcpu == 1);
    CHECK(code_of([&] { w.provision(w.admin, 1, {{"overrides", {{"vcpu", 3}}}}); }) == ErrorCode::InvalidArgument);
    w.sys("template.update", {{"template_id", w.tmpl}, {"spec", ResourceSpec{8, 8, 8, 1}}});
    CHECK(w.cp->state().instances.at(ids[0]).spec == ResourceSpec{1, 4, 20, 1});
  }

  TEST_CASE("user-built templates stay private to their project") {
    auto w = make_world();
    const std::string user = w.user("ursula").second;
    const Id other_project = w.sys("project.create", {{"name", "beta"}}).at("id").get<Id>();
    const Id tid = w.sys("template.register", {{"name", "mine"}, {"spec", ResourceSpec{1, 1, 1, 1}}, {"project_id", other_project}})
                       .at("id")
                       .get<Id>();
    CHECK(code_of([&] {
            w.as(user, "instance.provision", {{"farm_id", w.farm}, {"template_id", tid}, {"count", 1}});
          }) == ErrorCode::Forbidden);
    const Id own = w.as(user, "template.register", {{"name", "own"}, {"spec", ResourceSpec{1, 1, 1, 1}}, {"project_id", w.project}})
                       .at("id")
                       .get<Id>();
    CHECK(w.cp->state().templates.get(own).origin == TemplateOrigin::user_built);
    w.as(user, "instance.provision", {{"farm_id", w.farm}, {"template_id", own}, {"count", 1}});
  }

  TEST_CASE("host failure is detected after miss_limit intervals and fails instances") {
    auto w = make_world();
    const auto ids = w.provision(w.admin, 4);
    const Id victim = w.cp->state().instances.at(ids[0]).host_id.value();
    w.sys("sim.tick", {{"ms", 100}});
    w.sys("sim.kill_host", {{"host_id", victim}});
    Json r = w.sys("sim.tick", {{"ms", 19899}});
    CHECK(r.at("events").empty());
    CHECK(state_of(w, ids[0]) == "Running");
    r = w.sys("sim.tick", {{"ms", 1}});
    REQUIRE(r.at("events").size() == 1);
    CHECK(r.at("events")[0].at("at_ms") == 20000);
    CHECK(r.at("events")[0].at("newly_down")[0].get<Id>() == victim);
    CHECK(state_of(w, ids[0]) == "Failed");
    CHECK(w.cp->state().pools.host(victim).used_vcpu == 0);
    CHECK(check_invariants(w.cp->state()).empty());
    w.sys("sim.revive_host", {{"host_id", victim}});
    CHECK(w.cp->state().pools.host(victim).liveness == Liveness::up);
  }

  TEST_CASE("drain relocates every instance off the host") {
    auto w = make_world();
    w.provision(w.admin, 8);
    const Json r = w.sys("host.drain", {{"host_id", w.hosts[0]}});
    CHECK(r.at("moves").size() == 2);
    CHECK(w.cp->state().pools.host(w.hosts[0]).used_vcpu == 0);
    CHECK(w.cp->state().pools.host(w.hosts[0]).liveness == Liveness::draining);
    CHECK(check_invariants(w.cp->state()).empty());
    w.sys("host.undrain", {{"host_id", w.hosts[0]}});
    CHECK(w.cp->state().pools.host(w.hosts[0]).liveness == Liveness::up);
  }

  TEST_CASE("site loss fails over to the secondary with no acknowledged write lost") {
    WorldOptions o;
    o.dr = true;
    auto w = make_world(o);
    const auto ids = w.provision(w.admin, 3);
    const Id vol = w.sys("volume.create", {{"farm_id", w.farm}, {"size_gib", 10}}).at("id").get<Id>();
    for (int b = 0; b < 20; ++b) w.sys("volume.write", {{"volume_id", vol}, {"block", b}});
    w.sys("sim.kill_site", {{"site_id", w.site}});
    CHECK(code_of([&] { w.sys("volume.write", {{"volume_id", vol}, {"block", 99}}); }) == ErrorCode::SiteUnavailable);
    w.sys("sim.tick", {{"ms", 30000}});
    const Json fo = w.cp->query("failovers", {}, w.admin);
    REQUIRE(fo.size() == 1);
    CHECK(fo[0].at("trigger") == "auto");
    CHECK(fo[0].at("to_site").get<Id>() == w.dr_site);
    CHECK(fo[0].at("farms")[0].at("volumes")[0].at("missing_acked") == 0);
    for (const auto& i : ids) {
      CHECK(state_of(w, i) == "Running");
      const Id h = w.cp->state().instances.at(i).host_id.value();
      CHECK(std::find(w.dr_hosts.begin(), w.dr_hosts.end(), h) != w.dr_hosts.end());
      CHECK(!w.cp->state().net.assignments_of(i).empty());
    }
    const Json v = w.cp->query("volumes", {}, w.admin)[0];
    CHECK(v.at("journal_length") == 20);
    CHECK(v.at("site_id").get<Id>() == w.dr_site);
    w.sys("volume.write", {{"volume_id", vol}, {"block", 99}});
    CHECK(check_invariants(w.cp->state()).empty());
    // Failback is manual: repair the old site, then fail back to it.
    w.sys("sim.revive_site", {{"site_id", w.site}});
    w.sys("site.repair", {{"site_id", w.site}});
    w.sys("site.failover", {{"site_id", w.site}});
    CHECK(code_of([&] { w.sys("site.failover", {{"site_id", w.site}}); }) == ErrorCode::AlreadyActive);
    for (const auto& i : ids) {
      const Id h = w.cp->state().instances.at(i).host_id.value();
      CHECK(std::find(w.hosts.begin(), w.hosts.end(), h) != w.hosts.end());
    }
    CHECK(w.cp->query("volumes", {}, w.admin)[0].at("journal_length") == 21);
  }

  TEST_CASE("object store through the command surface") {
    auto w = make_world();
    w.sys("object.put", {{"farm_id", w.farm}, {"key", "a/b"}, {"size_bytes", 1000}, {"content_hash", "h1"}});
    const Json o = w.cp->query("object", {{"key", "a/b"}}, w.admin);
    CHECK(o.at("live_replicas") == 3);
    CHECK(o.at("content_hash") == "h1");
    w.sys("sim.kill_node", {{"node_id", o.at("replica_nodes")[0]}});
    CHECK(w.cp->query("object", {{"key", "a/b"}}, w.admin).at("live_replicas") == 3);  // repaired in reconcile
    CHECK(code_of([&] {
            w.sys("object.put", {{"farm_id", w.farm}, {"key", "big"}, {"size_bytes", std::int64_t{11} << 30}});
          }) == ErrorCode::QuotaExceeded);
    w.sys("object.delete", {{"key", "a/b"}});
    CHECK(code_of([&] { (void)w.cp->query("object", {{"key", "a/b"}}, w.admin); }) == ErrorCode::NotFound);
  }

  TEST_CASE("block quota includes the farm share") {
    auto w = make_world();
    w.sys("farm.share.set", {{"farm_id", w.farm}, {"used_gib", 150}});
    w.sys("volume.create", {{"farm_id", w.farm}, {"size_gib", 50}});
    CHECK(code_of([&] { w.sys("volume.create", {{"farm_id", w.farm}, {"size_gib", 1}}); }) == ErrorCode::QuotaExceeded);
    CHECK(code_of([&] { w.sys("farm.share.set", {{"farm_id", w.farm}, {"used_gib", 151}}); }) == ErrorCode::QuotaExceeded);
  }

  TEST_CASE("networks, firewall and load balancer commands") {
    auto w = make_world();
    const auto ids = w.provision(w.admin, 2);
    w.sys("firewall.create", {{"scope_kind", "farm"}, {"scope_id", w.farm}, {"protocol", "tcp"}, {"port_low", 22},
                              {"port_high", 22}, {"remote_cidr", "10.0.0.0/8"}, {"action", "allow"}, {"priority", 10}});
    Json q{{"scope_kind", "farm"}, {"scope_id", w.farm}, {"protocol", "tcp"}, {"port", 22}, {"remote_ip", "10.3.3.3"}};
    CHECK(w.cp->query("firewall_evaluate", q, w.admin).at("action") == "allow");
    q["remote_ip"] = "11.0.0.1";
    CHECK(w.cp->query("firewall_evaluate", q, w.admin).at("action") == "deny");
    const Id lb = w.sys("lb.create", {{"farm_id", w.farm}, {"vip", "10.10.3.250"}, {"port", 80}, {"backend_instance_ids", ids},
                                      {"algorithm", "round_robin"}})
                      .at("id")
                      .get<Id>();
    std::set<Id> picked;
    for (int k = 0; k < 4; ++k) picked.insert(w.sys("lb.pick", {{"rule_id", lb}}).at("backend").get<Id>());
    CHECK(picked.size() == 2);
    const Json nets = w.cp->query("networks", {}, w.admin);
    REQUIRE(nets.size() == 1);
    CHECK(nets[0].at("free") == 1021 - 3);  // two instances plus the reserved vip
  }

  TEST_CASE("metering report and recommendations") {
    WorldOptions o;
    o.config = {{"meter.min_samples", "10"}};
    auto w = make_world(o);
    const auto dev = w.provision(w.admin, 1, {{"workload_class", "development"}});
    const auto svc = w.provision(w.admin, 1, {{"workload_class", "service"}});
    Json samples = Json::array();
    for (int t = 0; t < 20; ++t) {
      samples.push_back({{"instance_id", dev[0]}, {"cpu_pct", 2.0}, {"at_ms", t * 1000}});
      samples.push_back({{"instance_id", svc[0]}, {"cpu_pct", 70.0}, {"at_ms", t * 1000}});
    }
    w.sys("meter.ingest_batch", {{"samples", samples}});
    const Json r = w.cp->query("report", {{"end_ms", 100000}}, w.admin);
    CHECK(r.at("per_class").at("service").at("mean_pct") == 70.0);
    CHECK(r.at("recommended_vcpu").at("development") == 1);
    CHECK(r.at("recommended_vcpu").at("service") == 2);
    const Json csv = w.cp->query("report", {{"end_ms", 100000}, {"format", "csv"}}, w.admin);
    CHECK(csv.at("csv").get<std::string>().find("service,ALL,70.00,70.00,20") != std::string::npos);
    Json bad = Json::array({{{"instance_id", dev[0]}, {"cpu_pct", 1.0}, {"at_ms", 0}}});
    CHECK(code_of([&] { w.sys("meter.ingest_batch", {{"samples", bad}}); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("credentials never reach the journal") {
    auto w = make_world();
    w.user("ursula");
    for (const auto& r : w.cp->journal()) {
      CHECK(r.payload.dump().find("ursula-pw") == std::string::npos);
      CHECK(r.payload.dump().find("\"password\"") == std::string::npos);
    }
  }

  TEST_CASE("config file, env overrides and unknown keys") {
    const auto dir = std::filesystem::temp_directory_path() / "deskcloud_cfg_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "c.conf").string();
    {
      std::ofstream f(path);
      f << "# comment\nseed = 77\nheartbeat.interval_ms = 2000\n";
    }
    ::setenv("DESKCLOUD_HEARTBEAT_MISS_LIMIT", "5", 1);
    const Config c = load_config(path);
    ::unsetenv("DESKCLOUD_HEARTBEAT_MISS_LIMIT");
    CHECK(c.seed == 77);
    CHECK(c.heartbeat_interval == Duration{2000});
    CHECK(c.miss_limit == 5);
    Config d;
    CHECK(code_of([&] { d.set("no.such.key", "1"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { d.set("seed", "abc"); }) == ErrorCode::InvalidArgument);
    std::filesystem::remove_all(dir);
  }
}
