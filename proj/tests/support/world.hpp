#pragma once

// Builds a small control plane with a site, pool, project, template and
// farm through the public command surface.

#include <memory>
#include <string>
#include <vector>

#include "deskcloud/control/control_plane.hpp"

namespace deskcloud::testing {

struct WorldOptions {
  int hosts = 4;
  int vcpu = 32;
  std::int64_t memory_gib = 256;
  std::int64_t disk_gib = 8192;
  int farm_hosts = 4;
  int max_instances = 64;
  std::int64_t object_gib = 10;
  std::int64_t block_gib = 200;
  bool dr = false;
  std::string replication_mode = "sync";
  std::string network_cidr = "10.10.0.0/22";
  int storage_nodes = 5;
  std::int64_t node_capacity_gib = 100;
  ResourceSpec spec{2, 4, 20, 1};
  std::vector<std::pair<std::string, std::string>> config;
};

struct World {
  std::unique_ptr<ControlPlane> cp;
  std::string admin;
  Id site, pool, project, tmpl, farm;
  Id dr_site, dr_pool;
  std::vector<Id> hosts, dr_hosts, nodes;

  Json sys(const std::string& name, const Json& payload) { return cp->submit_system(name, payload); }
  Json as(const std::string& token, const std::string& name, const Json& payload) { return cp->submit(name, payload, token); }

  // Creates a user (member of the world project unless `outsider`) and
  // returns {user id, token}.
  std::pair<Id, std::string> user(const std::string& name, Role role = Role::user, bool outsider = false) {
    Json p{{"username", name}, {"password", name + "-pw"}, {"role", role}};
    if (!outsider) p["project_ids"] = std::vector<Id>{project};
    const Id id = sys("user.create", p).at("id").get<Id>();
    return {id, cp->login(name, name + "-pw").at("token").get<std::string>()};
  }

  std::vector<Id> provision(const std::string& token, int count, const Json& extra = Json::object()) {
    Json p{{"farm_id", farm}, {"template_id", tmpl}, {"count", count}};
    for (const auto& [k, v] : extra.items()) p[k] = v;
    std::vector<Id> out;
    const Json res = as(token, "instance.provision", p);
    for (const auto& i : res.at("instances")) out.push_back(i.at("id").get<Id>());
    return out;
  }
};

inline World make_world(const WorldOptions& o = {}) {
  Config cfg;
  for (const auto& [k, v] : o.config) cfg.set(k, v);
  World w;
  w.cp = std::make_unique<ControlPlane>(cfg);
  w.admin = w.cp->login(cfg.admin_username, cfg.admin_password).at("token").get<std::string>();
  w.site = w.sys("site.create", {{"name", "primary"}, {"role", "primary"}, {"replication_mode", o.replication_mode}}).at("id").get<Id>();
  w.pool = w.sys("pool.create", {{"name", "pool-a"}, {"site_id", w.site}}).at("id").get<Id>();
  for (int i = 0; i < o.hosts; ++i)
    w.hosts.push_back(w.sys("host.add", {{"pool_id", w.pool},
                                         {"name", "a" + std::to_string(i)},
                                         {"vcpu", o.vcpu},
                                         {"memory_gib", o.memory_gib},
                                         {"disk_gib", o.disk_gib}})
                          .at("id")
                          .get<Id>());
  if (o.dr) {
    w.dr_site = w.sys("site.create", {{"name", "secondary"}, {"role", "secondary"}, {"peer_site_id", w.site},
                                      {"replication_mode", o.replication_mode}})
                    .at("id")
                    .get<Id>();
    w.dr_pool = w.sys("pool.create", {{"name", "pool-b"}, {"site_id", w.dr_site}}).at("id").get<Id>();
    for (int i = 0; i < o.hosts; ++i)
      w.dr_hosts.push_back(w.sys("host.add", {{"pool_id", w.dr_pool},
                                              {"name", "b" + std::to_string(i)},
                                              {"vcpu", o.vcpu},
                                              {"memory_gib", o.memory_gib},
                                              {"disk_gib", o.disk_gib}})
                               .at("id")
                               .get<Id>());
  }
  for (int i = 0; i < o.storage_nodes; ++i)
    w.nodes.push_back(w.sys("object.node.add", {{"name", "n" + std::to_string(i)}, {"capacity_gib", o.node_capacity_gib}}).at("id").get<Id>());
  w.project = w.sys("project.create", {{"name", "alpha"}}).at("id").get<Id>();
  w.tmpl = w.sys("template.register", {{"name", "base"}, {"spec", o.spec}}).at("id").get<Id>();
  Json farm{{"name", "farm-a"},
            {"project_id", w.project},
            {"pool_id", w.pool},
            {"quota", {{"max_hosts", o.farm_hosts}, {"max_instances", o.max_instances}, {"object_quota_gib", o.object_gib}, {"block_quota_gib", o.block_gib}}}};
  if (!o.network_cidr.empty()) farm["network_cidr"] = o.network_cidr;
  if (o.dr) farm["secondary_pool_id"] = w.dr_pool;
  w.farm = w.sys("farm.create", farm).at("id").get<Id>();
  return w;
}

}  // namespace deskcloud::testing
