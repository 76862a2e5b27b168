#include "deskcloud/farm/farm.hpp"

#include "deskcloud/core/error.hpp"

namespace deskcloud {

const std::vector<Id>& Farm::active_allotment() const {
  if (dr && site_id == dr->secondary_site) return dr->secondary_allotment;
  return allotted_hosts;
}

std::vector<int> allocate_vlans(const std::map<Id, Farm>& farms, const Id& site, std::size_t count,
                                const std::set<int>& taken) {
  std::set<int> used = taken;
  for (const auto& [_, f] : farms)
    if (f.primary_site == site || (f.dr && f.dr->secondary_site == site)) used.insert(f.vlan_ids.begin(), f.vlan_ids.end());
  std::vector<int> out;
  for (int v = 100; v <= 4094 && out.size() < count; ++v)
    if (!used.contains(v)) out.push_back(v);
  if (out.size() < count) raise(ErrorCode::PoolExhausted, "no free VLAN ids on site " + site.value);
  return out;
}

RemoteAccess make_remote_access(const Id& instance_id, bool agent, bool vdi, bool desktop) {
  RemoteAccess r{agent, vdi, desktop, {}};
  if (agent) r.endpoints["agent"] = "agent://" + instance_id.value;
  if (vdi) r.endpoints["vdi"] = "vdi://" + instance_id.value + ":3389";
  if (desktop) r.endpoints["desktop"] = "desktop://" + instance_id.value;
  return r;
}

void validate(const FarmQuota& q) {
  if (q.max_hosts < 0 || q.max_instances < 0 || q.object_quota_gib < 0 || q.block_quota_gib < 0)
    raise(ErrorCode::InvalidArgument, "farm quota fields must be >= 0");
}

void to_json(Json& j, const Site& s) {
  j = Json{{"id", s.id},         {"name", s.name},
           {"role", s.role},     {"status", s.status},
           {"replication_mode", s.replication_mode}, {"peer_site", s.peer_site},
           {"reachable", s.reachable}};
}

void from_json(const Json& j, Site& s) {
  j.at("id").get_to(s.id);
  s.name = field_or<std::string>(j, "name", "");
  j.at("role").get_to(s.role);
  j.at("status").get_to(s.status);
  j.at("replication_mode").get_to(s.replication_mode);
  s.peer_site = opt_field<Id>(j, "peer_site");
  s.reachable = field_or(j, "reachable", true);
}

void to_json(Json& j, const FarmQuota& q) {
  j = Json{{"max_hosts", q.max_hosts}, {"max_instances", q.max_instances}, {"object_quota_gib", q.object_quota_gib}, {"block_quota_gib", q.block_quota_gib}};
}

void from_json(const Json& j, FarmQuota& q) {
  j.at("max_hosts").get_to(q.max_hosts);
  j.at("max_instances").get_to(q.max_instances);
  j.at("object_quota_gib").get_to(q.object_quota_gib);
  j.at("block_quota_gib").get_to(q.block_quota_gib);
}

void to_json(Json& j, const RemoteAccess& r) {
  j = Json{{"agent", r.agent}, {"vdi", r.vdi}, {"desktop", r.desktop}, {"endpoints", r.endpoints}};
}

void from_json(const Json& j, RemoteAccess& r) {
  j.at("agent").get_to(r.agent);
  j.at("vdi").get_to(r.vdi);
  j.at("desktop").get_to(r.desktop);
  j.at("endpoints").get_to(r.endpoints);
}

void to_json(Json& j, const Farm& f) {
  Json remote = Json::object();
  for (const auto& [inst, ra] : f.remote_access) remote[inst.value] = ra;
  Json dr = nullptr;
  if (f.dr)
    dr = Json{{"secondary_site", f.dr->secondary_site},
              {"secondary_pool", f.dr->secondary_pool},
              {"secondary_allotment", f.dr->secondary_allotment}};
  j = Json{{"id", f.id},
           {"name", f.name},
           {"project_id", f.project_id},
           {"site_id", f.site_id},
           {"pool_id", f.pool_id},
           {"primary_site", f.primary_site},
           {"primary_pool", f.primary_pool},
           {"quota", f.quota},
           {"vlan_ids", f.vlan_ids},
           {"share", f.share},
           {"directory_service", {{"enabled", f.directory_service.enabled}, {"type_label", f.directory_service.type_label}}},
           {"remote_access", std::move(remote)},
           {"allotted_hosts", f.allotted_hosts},
           {"dr", std::move(dr)},
           {"delta_seq", f.delta_seq},
           {"replicated_seq", f.replicated_seq},
           {"standby_state", f.standby_state},
           {"degraded", f.degraded}};
}

void from_json(const Json& j, Farm& f) {
  j.at("id").get_to(f.id);
  f.name = field_or<std::string>(j, "name", "");
  j.at("project_id").get_to(f.project_id);
  j.at("site_id").get_to(f.site_id);
  j.at("pool_id").get_to(f.pool_id);
  j.at("primary_site").get_to(f.primary_site);
  j.at("primary_pool").get_to(f.primary_pool);
  j.at("quota").get_to(f.quota);
  j.at("vlan_ids").get_to(f.vlan_ids);
  j.at("share").get_to(f.share);
  const auto& ds = j.at("directory_service");
  f.directory_service = {ds.at("enabled").get<bool>(), ds.at("type_label").get<std::string>()};
  f.remote_access.clear();
  for (const auto& [inst, ra] : j.at("remote_access").items()) f.remote_access[Id{inst}] = ra.get<RemoteAccess>();
  j.at("allotted_hosts").get_to(f.allotted_hosts);
  f.dr.reset();
  if (const auto& dr = j.at("dr"); !dr.is_null())
    f.dr = DrPair{dr.at("secondary_site").get<Id>(), dr.at("secondary_pool").get<Id>(),
                  dr.at("secondary_allotment").get<std::vector<Id>>()};
  j.at("delta_seq").get_to(f.delta_seq);
  j.at("replicated_seq").get_to(f.replicated_seq);
  f.standby_state = j.at("standby_state");
  j.at("degraded").get_to(f.degraded);
}

void to_json(Json& j, const ReplicationReport& r) {
  j = Json{{"farm_id", r.farm_id}, {"from_seq", r.from_seq}, {"to_seq", r.to_seq}, {"lag", r.lag}, {"shipped", r.shipped}};
}

}  // namespace deskcloud
