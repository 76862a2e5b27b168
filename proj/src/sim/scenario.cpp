#include "deskcloud/sim/scenario.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "deskcloud/control/invariants.hpp"
#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"
#include "deskcloud/metering/metering.hpp"

namespace deskcloud {

namespace {

[[noreturn]] void parse_error(const std::string& where, const std::string& what) {
  raise(ErrorCode::ScenarioParseError, where + ": " + what);
}

const Json& need(const Json& j, const std::string& where, const char* key) {
  if (!j.is_object()) parse_error(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) parse_error(where, std::string("missing '") + key + "'");
  return *it;
}

template <class T>
T get_as(const Json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const Json::exception& e) {
    parse_error(where, e.what());
  } catch (const Error& e) {
    parse_error(where, e.what());
  }
}

template <class T>
T need_as(const Json& j, const std::string& where, const char* key) {
  return get_as<T>(need(j, where, key), where + "." + key);
}

template <class T>
std::optional<T> maybe(const Json& j, const std::string& where, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get_as<T>(*it, where + "." + key);
}

template <class T>
T or_default(const Json& j, const std::string& where, const char* key, T fallback) {
  return maybe<T>(j, where, key).value_or(std::move(fallback));
}

const Json& array_or_empty(const Json& j, const std::string& where, const char* key) {
  static const Json empty = Json::array();
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_array()) parse_error(where + "." + key, "expected an array");
  return *it;
}

std::string at(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

const std::set<std::string>& event_types() {
  static const std::set<std::string> types{"kill_host",  "revive_host", "revive",      "kill_site",  "revive_site",
                                           "drain",      "undrain",     "load_burst",  "block_writes", "kill_node",
                                           "revive_node", "failover",   "repair_site", "destroy_farm_instances"};
  return types;
}

std::string config_value(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void check_unique(std::set<std::string>& seen, const std::string& name, const std::string& where) {
  if (name.empty()) parse_error(where, "name must not be empty");
  if (!seen.insert(name).second) parse_error(where, "duplicate name '" + name + "'");
}

std::string host_name(const std::string& pool, int index) { return pool + "-h" + std::to_string(index); }
std::string node_name(int index) { return "node-" + std::to_string(index); }

}  // namespace

Scenario parse_scenario(const Json& doc) {
  Scenario s;
  const std::string root = "scenario";
  if (!doc.is_object()) parse_error(root, "expected an object");
  s.schema_version = need_as<int>(doc, root, "schema_version");
  if (s.schema_version != kScenarioSchemaVersion)
    parse_error(root + ".schema_version", "unsupported version " + std::to_string(s.schema_version));
  s.seed = or_default<std::uint64_t>(doc, root, "seed", 1);
  if (auto it = doc.find("config"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) parse_error(root + ".config", "expected an object");
    for (const auto& [k, v] : it->items()) s.config[k] = config_value(v);
  }

  std::set<std::string> sites, pools, networks, templates, farms, projects;
  std::map<std::string, int> host_counts;
  const Json& jsites = array_or_empty(doc, root, "sites");
  for (std::size_t i = 0; i < jsites.size(); ++i) {
    const std::string w = at(root + ".sites", i);
    ScenarioSite site;
    site.name = need_as<std::string>(jsites[i], w, "name");
    check_unique(sites, site.name, w);
    site.role = or_default<std::string>(jsites[i], w, "role", "primary");
    if (site.role != "primary" && site.role != "secondary") parse_error(w + ".role", "must be primary or secondary");
    site.peer = maybe<std::string>(jsites[i], w, "peer");
    if (site.peer && (!sites.contains(*site.peer) || *site.peer == site.name))
      parse_error(w + ".peer", "must name an earlier site");
    site.replication_mode = maybe<std::string>(jsites[i], w, "replication_mode");
    if (site.replication_mode && *site.replication_mode != "sync" && *site.replication_mode != "async")
      parse_error(w + ".replication_mode", "must be sync or async");
    s.sites.push_back(std::move(site));
  }

  const Json& jpools = array_or_empty(doc, root, "pools");
  for (std::size_t i = 0; i < jpools.size(); ++i) {
    const std::string w = at(root + ".pools", i);
    ScenarioPool pool;
    pool.name = need_as<std::string>(jpools[i], w, "name");
    check_unique(pools, pool.name, w);
    pool.site = need_as<std::string>(jpools[i], w, "site");
    if (!sites.contains(pool.site)) parse_error(w + ".site", "unknown site '" + pool.site + "'");
    pool.overcommit_ratio = maybe<double>(jpools[i], w, "overcommit_ratio");
    const Json& h = need(jpools[i], w, "hosts");
    const std::string hw = w + ".hosts";
    pool.hosts.count = need_as<int>(h, hw, "count");
    pool.hosts.vcpu = need_as<int>(h, hw, "vcpu");
    pool.hosts.memory_gib = need_as<std::int64_t>(h, hw, "memory_gib");
    pool.hosts.disk_gib = need_as<std::int64_t>(h, hw, "disk_gib");
    if (pool.hosts.count < 0 || pool.hosts.vcpu < 1 || pool.hosts.memory_gib < 1 || pool.hosts.disk_gib < 1)
      parse_error(hw, "host counts and capacities must be positive");
    host_counts[pool.name] = pool.hosts.count;
    s.pools.push_back(std::move(pool));
  }

  const Json& jnets = array_or_empty(doc, root, "networks");
  for (std::size_t i = 0; i < jnets.size(); ++i) {
    const std::string w = at(root + ".networks", i);
    ScenarioNetwork n{need_as<std::string>(jnets[i], w, "name"), need_as<std::string>(jnets[i], w, "site"),
                      need_as<std::string>(jnets[i], w, "cidr")};
    check_unique(networks, n.name, w);
    if (!sites.contains(n.site)) parse_error(w + ".site", "unknown site '" + n.site + "'");
    s.networks.push_back(std::move(n));
  }

  if (auto it = doc.find("storage_nodes"); it != doc.end() && !it->is_null()) {
    const std::string w = root + ".storage_nodes";
    s.storage_node_count = need_as<int>(*it, w, "count");
    s.storage_node_capacity_gib = need_as<std::int64_t>(*it, w, "capacity_gib");
    if (s.storage_node_count < 0 || s.storage_node_capacity_gib < 1) parse_error(w, "count and capacity must be positive");
  }

  const Json& jprojects = array_or_empty(doc, root, "projects");
  for (std::size_t i = 0; i < jprojects.size(); ++i) {
    const std::string w = at(root + ".projects", i);
    auto name = get_as<std::string>(jprojects[i], w);
    check_unique(projects, name, w);
    s.projects.push_back(std::move(name));
  }

  const Json& jtemplates = array_or_empty(doc, root, "templates");
  for (std::size_t i = 0; i < jtemplates.size(); ++i) {
    const std::string w = at(root + ".templates", i);
    ScenarioTemplate t;
    t.name = need_as<std::string>(jtemplates[i], w, "name");
    check_unique(templates, t.name, w);
    t.spec = need_as<ResourceSpec>(jtemplates[i], w, "spec");
    t.workload_class = or_default(jtemplates[i], w, "workload_class", WorkloadClass::development);
    t.os_label = or_default<std::string>(jtemplates[i], w, "os_label", "linux");
    s.templates.push_back(std::move(t));
  }

  const Json& jfarms = array_or_empty(doc, root, "farms");
  for (std::size_t i = 0; i < jfarms.size(); ++i) {
    const std::string w = at(root + ".farms", i);
    const Json& jf = jfarms[i];
    ScenarioFarm f;
    f.name = need_as<std::string>(jf, w, "name");
    check_unique(farms, f.name, w);
    f.project = need_as<std::string>(jf, w, "project");
    if (!projects.contains(f.project)) parse_error(w + ".project", "unknown project '" + f.project + "'");
    f.pool = need_as<std::string>(jf, w, "pool");
    if (!pools.contains(f.pool)) parse_error(w + ".pool", "unknown pool '" + f.pool + "'");
    f.secondary_pool = maybe<std::string>(jf, w, "secondary_pool");
    if (f.secondary_pool && !pools.contains(*f.secondary_pool))
      parse_error(w + ".secondary_pool", "unknown pool '" + *f.secondary_pool + "'");
    f.network_cidr = maybe<std::string>(jf, w, "network_cidr");
    f.quota = need(jf, w, "quota");
    get_as<FarmQuota>(f.quota, w + ".quota");
    const Json& groups = array_or_empty(jf, w, "instances");
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const std::string gw = at(w + ".instances", g);
      ScenarioInstanceGroup group;
      group.template_name = need_as<std::string>(groups[g], gw, "template");
      if (!templates.contains(group.template_name)) parse_error(gw + ".template", "unknown template '" + group.template_name + "'");
      group.count = or_default(groups[g], gw, "count", 1);
      if (group.count < 1) parse_error(gw + ".count", "must be >= 1");
      group.workload_class = maybe<WorkloadClass>(groups[g], gw, "workload_class");
      if (auto it = groups[g].find("overrides"); it != groups[g].end()) group.overrides = *it;
      group.volume_gib = maybe<std::int64_t>(groups[g], gw, "volume_gib");
      group.anti_affinity_group = maybe<std::string>(groups[g], gw, "anti_affinity_group");
      f.instances.push_back(std::move(group));
    }
    if (auto it = jf.find("volumes"); it != jf.end() && !it->is_null()) {
      f.volume_count = need_as<int>(*it, w + ".volumes", "count");
      f.volume_gib = need_as<std::int64_t>(*it, w + ".volumes", "size_gib");
    }
    if (auto it = jf.find("objects"); it != jf.end() && !it->is_null()) {
      f.object_count = need_as<int>(*it, w + ".objects", "count");
      f.object_size_bytes = need_as<std::int64_t>(*it, w + ".objects", "size_bytes");
    }
    s.farms.push_back(std::move(f));
  }

  if (auto it = doc.find("load"); it != doc.end() && !it->is_null()) {
    s.load.interval_ms = need_as<std::int64_t>(*it, root + ".load", "interval_ms");
    if (s.load.interval_ms < 0) parse_error(root + ".load.interval_ms", "must be >= 0");
  }
  s.duration_ms = or_default<std::int64_t>(doc, root, "duration_ms", 0);
  if (s.duration_ms < 0) parse_error(root + ".duration_ms", "must be >= 0");

  const Json& jevents = array_or_empty(doc, root, "events");
  std::int64_t last = 0;
  for (std::size_t i = 0; i < jevents.size(); ++i) {
    const std::string w = at(root + ".events", i);
    ScenarioEvent e;
    e.at_ms = need_as<std::int64_t>(jevents[i], w, "at_ms");
    if (e.at_ms < last) parse_error(w + ".at_ms", "event times must not decrease");
    last = e.at_ms;
    e.type = need_as<std::string>(jevents[i], w, "type");
    if (!event_types().contains(e.type)) parse_error(w + ".type", "unknown event '" + e.type + "'");
    e.args = jevents[i];

    auto check_host = [&](const std::string& key) {
      const auto name = need_as<std::string>(jevents[i], w, key.c_str());
      const auto dash = name.rfind("-h");
      bool ok = false;
      if (dash != std::string::npos && host_counts.contains(name.substr(0, dash))) {
        const std::string idx = name.substr(dash + 2);
        ok = !idx.empty() && idx.find_first_not_of("0123456789") == std::string::npos &&
             std::stoi(idx) < host_counts[name.substr(0, dash)];
      }
      if (!ok) parse_error(w + "." + key, "unknown host '" + name + "'");
    };
    auto check_site = [&] {
      const auto name = need_as<std::string>(jevents[i], w, "site");
      if (!sites.contains(name)) parse_error(w + ".site", "unknown site '" + name + "'");
    };
    auto check_node = [&] {
      const auto idx = need_as<int>(jevents[i], w, "node");
      if (idx < 0 || idx >= s.storage_node_count) parse_error(w + ".node", "unknown storage node " + std::to_string(idx));
    };
    auto check_farm = [&](bool required) {
      auto name = required ? std::optional(need_as<std::string>(jevents[i], w, "farm")) : maybe<std::string>(jevents[i], w, "farm");
      if (name && !farms.contains(*name)) parse_error(w + ".farm", "unknown farm '" + *name + "'");
    };
    if (e.type == "kill_host" || e.type == "revive_host" || e.type == "drain" || e.type == "undrain") {
      check_host("host");
    } else if (e.type == "kill_site" || e.type == "revive_site" || e.type == "failover" || e.type == "repair_site") {
      check_site();
    } else if (e.type == "kill_node" || e.type == "revive_node") {
      check_node();
    } else if (e.type == "revive") {
      if (jevents[i].contains("host")) check_host("host");
      else if (jevents[i].contains("site")) check_site();
      else if (jevents[i].contains("node")) check_node();
      else parse_error(w, "revive needs a host, site or node");
    } else if (e.type == "load_burst") {
      need_as<double>(jevents[i], w, "factor");
      need_as<int>(jevents[i], w, "samples");
      maybe<WorkloadClass>(jevents[i], w, "workload_class");
      check_farm(false);
    } else if (e.type == "block_writes") {
      check_farm(true);
      if (need_as<int>(jevents[i], w, "count") < 0) parse_error(w + ".count", "must be >= 0");
    } else if (e.type == "destroy_farm_instances") {
      check_farm(true);
    }
    s.events.push_back(std::move(e));
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::ScenarioParseError, "cannot read scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::exception& e) {
    raise(ErrorCode::ScenarioParseError, path + ": " + e.what());
  }
  return parse_scenario(doc);
}

Json to_json(const ScenarioReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations)
    violations.push_back(Json{{"at_ms", v.at_ms}, {"boundary", v.boundary}, {"invariant", v.violation.invariant},
                              {"detail", v.violation.detail}});
  return Json{{"seed", r.seed},           {"digest", r.digest},
              {"violations", violations}, {"failovers", r.failovers},
              {"events", r.event_log},    {"summary", r.summary},
              {"elapsed_seconds", r.elapsed_seconds}};
}

ScenarioRunner::ScenarioRunner(Scenario scenario) : scenario_(std::move(scenario)) {}

Config ScenarioRunner::config() const {
  Config c;
  for (const auto& [k, v] : scenario_.config) c.set(k, v);
  c.seed = scenario_.seed;
  c.data_dir.clear();
  return c;
}

Json ScenarioRunner::submit(const std::string& command, const Json& payload) {
  return plane_->submit_system(command, payload);
}

Id ScenarioRunner::resolve(const std::string& kind, const std::string& name) const {
  auto it = names_.find(kind + ":" + name);
  if (it == names_.end()) raise(ErrorCode::ScenarioParseError, "unresolved " + kind + " '" + name + "'");
  return it->second;
}

void ScenarioRunner::setup() {
  for (const auto& site : scenario_.sites) {
    Json p{{"name", site.name}, {"role", site.role}};
    if (site.peer) p["peer_site_id"] = resolve("site", *site.peer);
    if (site.replication_mode) p["replication_mode"] = *site.replication_mode;
    names_["site:" + site.name] = submit("site.create", p).at("id").get<Id>();
  }
  for (const auto& pool : scenario_.pools) {
    Json p{{"name", pool.name}, {"site_id", resolve("site", pool.site)}};
    if (pool.overcommit_ratio) p["overcommit_ratio"] = *pool.overcommit_ratio;
    const Id pid = submit("pool.create", p).at("id").get<Id>();
    names_["pool:" + pool.name] = pid;
    for (int i = 0; i < pool.hosts.count; ++i) {
      const std::string name = host_name(pool.name, i);
      const Json h = submit("host.add", Json{{"pool_id", pid},
                                             {"name", name},
                                             {"vcpu", pool.hosts.vcpu},
                                             {"memory_gib", pool.hosts.memory_gib},
                                             {"disk_gib", pool.hosts.disk_gib}});
      names_["host:" + name] = h.at("id").get<Id>();
    }
  }
  for (const auto& n : scenario_.networks)
    names_["network:" + n.name] =
        submit("net.pool.create", Json{{"name", n.name}, {"site_id", resolve("site", n.site)}, {"cidr", n.cidr}}).at("id").get<Id>();
  for (int i = 0; i < scenario_.storage_node_count; ++i)
    names_["node:" + std::to_string(i)] =
        submit("object.node.add", Json{{"name", node_name(i)}, {"capacity_gib", scenario_.storage_node_capacity_gib}})
            .at("id")
            .get<Id>();
  for (const auto& name : scenario_.projects)
    names_["project:" + name] = submit("project.create", Json{{"name", name}}).at("id").get<Id>();
  for (const auto& t : scenario_.templates)
    names_["template:" + t.name] =
        submit("template.register",
               Json{{"name", t.name}, {"spec", t.spec}, {"workload_class", t.workload_class}, {"os_label", t.os_label}})
            .at("id")
            .get<Id>();

  for (const auto& f : scenario_.farms) {
    Json p{{"name", f.name}, {"project_id", resolve("project", f.project)}, {"pool_id", resolve("pool", f.pool)}, {"quota", f.quota}};
    if (f.secondary_pool) p["secondary_pool_id"] = resolve("pool", *f.secondary_pool);
    if (f.network_cidr) p["network_cidr"] = *f.network_cidr;
    const Id fid = submit("farm.create", p).at("id").get<Id>();
    names_["farm:" + f.name] = fid;
    for (const auto& g : f.instances) {
      Json ip{{"farm_id", fid}, {"template_id", resolve("template", g.template_name)}, {"count", g.count}};
      if (g.workload_class) ip["workload_class"] = *g.workload_class;
      if (!g.overrides.is_null()) ip["overrides"] = g.overrides;
      if (g.volume_gib) ip["volume_gib"] = *g.volume_gib;
      if (g.anti_affinity_group) ip["anti_affinity_group"] = *g.anti_affinity_group;
      const Json out = submit("instance.provision", ip);
      for (const auto& inst : out.at("instances")) {
        const Id iid = inst.at("id").get<Id>();
        const WorkloadClass cls = plane_->state().instances.at(iid).workload_class;
        profiles_[iid] = std::make_unique<LoadProfile>(cls, scenario_.seed ^ stable_hash64(iid.value));
      }
    }
    for (int i = 0; i < f.volume_count; ++i)
      submit("volume.create", Json{{"farm_id", fid}, {"name", f.name + "-vol" + std::to_string(i)}, {"size_gib", f.volume_gib}});
    for (int i = 0; i < f.object_count; ++i)
      submit("object.put", Json{{"farm_id", fid}, {"key", f.name + "/obj-" + std::to_string(i)}, {"size_bytes", f.object_size_bytes}});
  }
}

void ScenarioRunner::sample_load() {
  const ControlState& s = plane_->state();
  const std::int64_t now = to_ms(s.clock.now());
  Json samples = Json::array();
  for (auto& [iid, profile] : profiles_) {
    auto it = s.instances.find(iid);
    if (it == s.instances.end() || it->second.state != LifecycleState::Running) continue;
    samples.push_back(Json{{"instance_id", iid}, {"at_ms", now}, {"cpu_pct", profile->next_pct()}});
  }
  if (!samples.empty()) submit("meter.ingest_batch", Json{{"samples", std::move(samples)}});
}

Json ScenarioRunner::apply(const ScenarioEvent& e) {
  const Json& a = e.args;
  auto host = [&] { return resolve("host", a.at("host").get<std::string>()); };
  auto site = [&] { return resolve("site", a.at("site").get<std::string>()); };
  auto node = [&] { return resolve("node", std::to_string(a.at("node").get<int>())); };
  if (e.type == "kill_host") return submit("sim.kill_host", Json{{"host_id", host()}});
  if (e.type == "revive_host") return submit("sim.revive_host", Json{{"host_id", host()}});
  if (e.type == "kill_site") return submit("sim.kill_site", Json{{"site_id", site()}});
  if (e.type == "revive_site") return submit("sim.revive_site", Json{{"site_id", site()}});
  if (e.type == "kill_node") return submit("sim.kill_node", Json{{"node_id", node()}});
  if (e.type == "revive_node") return submit("sim.revive_node", Json{{"node_id", node()}});
  if (e.type == "revive") {
    if (a.contains("host")) return submit("sim.revive_host", Json{{"host_id", host()}});
    if (a.contains("site")) return submit("sim.revive_site", Json{{"site_id", site()}});
    return submit("sim.revive_node", Json{{"node_id", node()}});
  }
  if (e.type == "drain") return submit("host.drain", Json{{"host_id", host()}});
  if (e.type == "undrain") return submit("host.undrain", Json{{"host_id", host()}});
  if (e.type == "failover") return submit("site.failover", Json{{"site_id", site()}});
  if (e.type == "repair_site") return submit("site.repair", Json{{"site_id", site()}});
  if (e.type == "load_burst") {
    const auto factor = a.at("factor").get<double>();
    const auto samples = a.at("samples").get<int>();
    std::optional<Id> farm;
    if (a.contains("farm")) farm = resolve("farm", a.at("farm").get<std::string>());
    std::optional<WorkloadClass> cls;
    if (a.contains("workload_class")) cls = a.at("workload_class").get<WorkloadClass>();
    std::size_t affected = 0;
    for (auto& [iid, profile] : profiles_) {
      const Instance& inst = plane_->state().instances.at(iid);
      if ((farm && inst.farm_id != *farm) || (cls && inst.workload_class != *cls)) continue;
      profile->burst(factor, samples);
      ++affected;
    }
    return Json{{"affected", affected}};
  }
  if (e.type == "block_writes") {
    const Id fid = resolve("farm", a.at("farm").get<std::string>());
    const auto vols = plane_->state().blocks.volumes_of_farm(fid);
    const int count = a.at("count").get<int>();
    std::size_t acked = 0;
    std::map<std::string, std::size_t> rejected;
    for (int i = 0; i < count && !vols.empty(); ++i) {
      const Id& vol = vols[static_cast<std::size_t>(i) % vols.size()];
      const std::uint64_t block = block_counter_++;
      try {
        submit("volume.write", Json{{"volume_id", vol}, {"block", block}, {"hash", sha256_hex("block#" + std::to_string(block)).substr(0, 16)}});
        ++acked;
      } catch (const Error& err) {
        ++rejected[std::string(to_string(err.code()))];
      }
    }
    return Json{{"acked", acked}, {"rejected", rejected}};
  }
  if (e.type == "destroy_farm_instances") {
    const Id fid = resolve("farm", a.at("farm").get<std::string>());
    std::vector<Id> ids;
    for (const auto& [iid, inst] : plane_->state().instances)
      if (inst.farm_id == fid && inst.state != LifecycleState::Destroyed) ids.push_back(iid);
    std::size_t destroyed = 0;
    for (const auto& iid : ids) {
      const LifecycleState st = plane_->state().instances.at(iid).state;
      if (st == LifecycleState::Running) submit("instance.stop", Json{{"instance_id", iid}});
      if (st == LifecycleState::Running || st == LifecycleState::Stopped || st == LifecycleState::Failed) {
        submit("instance.destroy", Json{{"instance_id", iid}});
        ++destroyed;
      }
    }
    return Json{{"destroyed", destroyed}};
  }
  raise(ErrorCode::ScenarioParseError, "unknown event '" + e.type + "'");
}

void ScenarioRunner::check(const std::string& boundary) {
  const std::int64_t now = to_ms(plane_->state().clock.now());
  for (auto& v : check_invariants(plane_->state())) report_.violations.push_back({now, boundary, std::move(v)});
}

ScenarioReport ScenarioRunner::run() {
  const auto started = std::chrono::steady_clock::now();
  plane_ = std::make_unique<ControlPlane>(config(), false);
  names_.clear();
  profiles_.clear();
  block_counter_ = 0;
  report_ = ScenarioReport{};
  report_.seed = scenario_.seed;

  setup();
  check("setup");

  std::int64_t end = scenario_.duration_ms;
  if (!scenario_.events.empty()) end = std::max(end, scenario_.events.back().at_ms);
  const std::int64_t interval = scenario_.load.interval_ms;
  std::int64_t next_sample = interval > 0 ? interval : -1;
  std::int64_t now = 0;
  std::size_t next_event = 0;

  auto advance = [&](std::int64_t to) {
    if (to <= now) return;
    const Json tick = submit("sim.tick", Json{{"ms", to - now}});
    for (const auto& ev : tick.at("events")) {
      report_.event_log.push_back(Json{{"at_ms", ev.at("at_ms")}, {"type", "sweep"}, {"result", ev}});
      if (!ev.at("failovers").empty()) check("sweep@" + std::to_string(ev.at("at_ms").get<std::int64_t>()));
    }
    now = to;
  };

  while (true) {
    std::int64_t target = -1;
    if (next_event < scenario_.events.size()) target = scenario_.events[next_event].at_ms;
    if (next_sample >= 0 && next_sample <= end && (target < 0 || next_sample <= target)) target = next_sample;
    if (target < 0) break;
    advance(target);
    if (target == next_sample) {
      sample_load();
      next_sample += interval;
    }
    while (next_event < scenario_.events.size() && scenario_.events[next_event].at_ms == now) {
      const ScenarioEvent& e = scenario_.events[next_event];
      Json entry{{"at_ms", now}, {"type", e.type}};
      try {
        entry["result"] = apply(e);
      } catch (const Error& err) {
        if (err.code() == ErrorCode::ScenarioParseError) throw;
        entry["error"] = to_string(err.code());
        entry["message"] = err.what();
      }
      report_.event_log.push_back(std::move(entry));
      check("event[" + std::to_string(next_event) + "]:" + e.type);
      ++next_event;
    }
  }
  advance(end);
  check("end");

  const ControlState& s = plane_->state();
  report_.digest = plane_->digest();
  report_.metrics_csv = report_csv(s.meter.report(sim_time_ms(0), sim_time_ms(now + 1)));
  report_.failovers = s.failovers;
  std::map<std::string, std::size_t> by_state;
  for (const auto& [_, inst] : s.instances) ++by_state[std::string(enum_name(inst.state))];
  std::size_t up = 0;
  for (const auto& [_, h] : s.pools.hosts())
    if (h.liveness == Liveness::up) ++up;
  report_.summary = Json{{"now_ms", now},
                         {"hosts", s.pools.hosts().size()},
                         {"hosts_up", up},
                         {"farms", s.farms.size()},
                         {"instances", by_state},
                         {"volumes", s.blocks.volumes().size()},
                         {"objects", s.objects.objects().size()},
                         {"journal_records", plane_->journal().size()}};
  report_.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report_;
}

ScenarioReport run_scenario(const Scenario& scenario) {
  ScenarioRunner runner(scenario);
  return runner.run();
}

}  // namespace deskcloud
