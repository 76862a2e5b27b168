#include "deskcloud/control/commands.hpp"

#include <algorithm>
#include <cstdio>

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"
#include "deskcloud/core/lifecycle.hpp"
#include "deskcloud/sched/scheduler.hpp"

namespace deskcloud {

namespace {

// ---- payload access -------------------------------------------------------

const Json& member(const Json& p, const char* key) {
  if (!p.is_object()) raise(ErrorCode::MalformedCommand, "payload must be an object");
  auto it = p.find(key);
  if (it == p.end() || it->is_null()) raise(ErrorCode::MalformedCommand, std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T req(const Json& p, const char* key) {
  return member(p, key).get<T>();
}

Id req_id(const Json& p, const char* key) {
  const Json& v = member(p, key);
  if (!v.is_string() || v.get<std::string>().empty())
    raise(ErrorCode::MalformedCommand, std::string("field '") + key + "' must be an id string");
  return Id{v.get<std::string>()};
}

template <class T>
std::optional<T> opt(const Json& p, const char* key) {
  if (!p.is_object()) raise(ErrorCode::MalformedCommand, "payload must be an object");
  return opt_field<T>(p, key);
}

ResourceOwner admin_only(const ControlState&, const Json&, const Id&) { return {}; }

// ---- shared helpers ---------------------------------------------------------

Instance& mutable_instance(ControlState& s, const Id& id) {
  auto it = s.instances.find(id);
  if (it == s.instances.end()) raise(ErrorCode::NotFound, "unknown instance: " + id.value);
  return it->second;
}

Farm& mutable_farm(ControlState& s, const Id& id) {
  auto it = s.farms.find(id);
  if (it == s.farms.end()) raise(ErrorCode::NotFound, "unknown farm: " + id.value);
  return it->second;
}

Site& mutable_site(ControlState& s, const Id& id) {
  auto it = s.sites.find(id);
  if (it == s.sites.end()) raise(ErrorCode::NotFound, "unknown site: " + id.value);
  return it->second;
}

ResourceOwner farm_owner(const ControlState& s, const Id& farm_id, const Id& creator) {
  return {farm_of(s, farm_id).project_id, creator};
}

ResourceOwner instance_owner(const ControlState& s, const Json& p, const Id&) {
  const Instance& inst = instance_of(s, req_id(p, "instance_id"));
  return farm_owner(s, inst.farm_id, inst.created_by);
}

ResourceOwner farm_create_owner(const ControlState& s, const Json& p, const Id& actor) {
  return farm_owner(s, req_id(p, "farm_id"), actor);
}

Id creator_of(const ControlState& s, const Id& resource) {
  auto it = s.creators.find(resource);
  return it == s.creators.end() ? Id{} : it->second;
}

PlacementRequest placement_for(const Farm& farm, const Instance& inst) {
  return PlacementRequest{inst.id, inst.spec, farm.id, farm.pool_id, inst.anti_affinity_group, farm.active_allotment()};
}

// Places and starts one instance using (and updating) a pool snapshot.
void start_on(ControlState& s, Instance& inst, PoolSnapshot& snap) {
  const Farm& farm = farm_of(s, inst.farm_id);
  if (farm.active_allotment().empty()) raise(ErrorCode::CapacityExhausted, "farm " + farm.id.value + " has no allotted hosts");
  if (!next_state(inst.state, LifecycleEvent::start))
    raise(ErrorCode::IllegalTransition,
          "illegal transition: " + std::string(enum_name(inst.state)) + " on start");
  const PlacementDecision d = place(placement_for(farm, inst), snap);
  Instance started = transition(inst, LifecycleEvent::start);
  started.host_id = d.host_id;
  s.pools.charge(d.host_id, inst.spec);
  apply(snap, d, inst.spec, inst.anti_affinity_group);
  inst = std::move(started);
}

std::vector<Id> default_networks(const ControlState& s, const Farm& farm, int count) {
  std::vector<Id> isolated, shared;
  for (const auto& [pid, p] : s.net.pools()) {
    if (p.farm_id == farm.id) isolated.push_back(pid);
    else if (!p.farm_id && p.site_id == farm.site_id) shared.push_back(pid);
  }
  std::vector<Id> candidates = isolated.empty() ? shared : isolated;
  if (candidates.empty()) raise(ErrorCode::PoolExhausted, "farm " + farm.id.value + " has no network pools");
  std::vector<Id> out;
  for (int i = 0; i < count; ++i) out.push_back(candidates[static_cast<std::size_t>(i) % candidates.size()]);
  return out;
}

void attribute(CommandContext& ctx, Instance& inst, const std::optional<std::vector<Id>>& networks,
               std::optional<std::int64_t> volume_gib) {
  ControlState& s = ctx.state;
  if (!next_state(inst.state, LifecycleEvent::attribute))
    raise(ErrorCode::IllegalTransition, "illegal transition: " + std::string(enum_name(inst.state)) + " on attribute");
  const Farm& farm = farm_of(s, inst.farm_id);
  const std::vector<Id> pools = networks ? *networks : default_networks(s, farm, inst.spec.network_count);
  s.net.attribute_networks(inst, pools);
  if (volume_gib) {
    BlockVolume v;
    v.id = s.ids.next(ctx.now());
    v.farm_id = farm.id;
    v.name = inst.id.value + "-disk";
    v.size_gib = *volume_gib;
    v.site_id = farm.site_id;
    v.attached_instance = inst.id;
    if (farm.dr) {
      v.replicated = true;
      v.peer_site = farm.site_id == farm.dr->secondary_site ? farm.primary_site : farm.dr->secondary_site;
      v.mode = s.sites.at(farm.site_id).replication_mode;
    }
    s.blocks.create(v, farm.quota.block_quota_gib, farm.share.used_gib);
    if (ctx.actor) s.creators[v.id] = *ctx.actor;
  }
  inst = transition(inst, LifecycleEvent::attribute);
}

bool template_visible(const Config& cfg, const Template& t, const Farm& farm) {
  if (t.published) return true;
  if (t.origin == TemplateOrigin::user_built && cfg.share_user_templates) return true;
  return t.project_id && *t.project_id == farm.project_id;
}

std::vector<Instance> create_instances(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Id farm_id = req_id(p, "farm_id");
  const Farm& farm = farm_of(s, farm_id);
  const Template& t = s.templates.get(req_id(p, "template_id"));
  if (!template_visible(ctx.config, t, farm))
    raise(ErrorCode::Forbidden, "template " + t.id.value + " is not available to this farm's project");
  const int count = field_or(p, "count", 1);
  if (count < 1) raise(ErrorCode::InvalidArgument, "count must be >= 1");
  if (live_instance_count(s, farm_id) + static_cast<std::size_t>(count) > static_cast<std::size_t>(farm.quota.max_instances))
    raise(ErrorCode::QuotaExceeded, "farm " + farm_id.value + " allows " + std::to_string(farm.quota.max_instances) + " instances");
  const SpecOverride overrides = field_or(p, "overrides", SpecOverride{});
  const Id creator = ctx.actor ? *ctx.actor : Id{"system"};
  auto created = s.templates.instantiate(t.id, count, farm_id, overrides, creator, s.ids, ctx.now());
  auto group = opt<std::string>(p, "anti_affinity_group");
  auto cls = opt<WorkloadClass>(p, "workload_class");
  for (auto& inst : created) {
    if (group) inst.anti_affinity_group = Id{*group};
    if (cls) inst.workload_class = *cls;
    s.instances.emplace(inst.id, inst);
  }
  ctx.touch(farm_id);
  return created;
}

Json instances_json(const ControlState& s, const std::vector<Id>& ids) {
  Json out = Json::array();
  for (const auto& id : ids) out.push_back(instance_json(s, s.instances.at(id)));
  return out;
}

PoolSnapshot farm_snapshot(const ControlState& s, const Farm& farm) {
  return make_snapshot(s.pools, farm.pool_id, s.instances);
}

// ---- auth and admin -------------------------------------------------------

Json h_user_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const auto username = req<std::string>(p, "username");
  const Role role = field_or(p, "role", Role::user);
  const auto projects = field_or(p, "project_ids", std::set<Id>{});
  std::string salt, hash;
  if (auto h = opt<std::string>(p, "credential_hash")) {
    salt = req<std::string>(p, "salt");
    hash = *h;
  } else {
    salt = credential_salt(s.ids.seed(), username);
    hash = credential_digest(salt, req<std::string>(p, "password"));
  }
  const Id id = s.ids.next(ctx.now());
  const User& u = s.auth.add_user_record(User{id, username, role, projects, salt, hash});
  ctx.journal_payload = Json{{"username", username}, {"role", role}, {"project_ids", projects}, {"salt", salt}, {"credential_hash", hash}};
  return public_view(u);
}

Json h_project_create(CommandContext& ctx, const Json& p) {
  const Id id = ctx.state.ids.next(ctx.now());
  return ctx.state.auth.add_project(id, req<std::string>(p, "name"));
}

Json h_project_member_add(CommandContext& ctx, const Json& p) {
  ctx.state.auth.add_membership(req_id(p, "user_id"), req_id(p, "project_id"));
  return public_view(ctx.state.auth.user(req_id(p, "user_id")));
}

char hex_digit(unsigned v) { return "0123456789abcdef"[v & 0xf]; }

Json h_login(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const auto username = req<std::string>(p, "username");
  std::set<Surface> surfaces;
  if (auto it = p.find("surfaces"); it != p.end() && !it->is_null())
    surfaces = it->get<std::set<Surface>>();
  else
    surfaces = {kAllSurfaces.begin(), kAllSurfaces.end()};
  ctx.journal_payload = Json{{"username", username}, {"surfaces", surfaces}};
  if (!ctx.replay) {
    const User* u = s.auth.find_user(username);
    if (!u) raise(ErrorCode::UnknownUser, "unknown user: " + username);
    if (credential_digest(u->salt, req<std::string>(p, "password")) != u->credential_hash)
      raise(ErrorCode::BadCredential, "credential rejected for " + username);
  }
  std::uint64_t r = s.ids.random64();
  std::string token = "dct_";
  for (int i = 15; i >= 0; --i) token += hex_digit(static_cast<unsigned>(r >> (4 * i)));
  s.auth.purge_expired(ctx.now());
  const AuthToken& t = s.auth.issue(username, surfaces, ctx.now(), ctx.config.token_ttl, token);
  Json out = t;
  out["role"] = s.auth.user(t.user_id).role;
  return out;
}

Json h_site_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Site site;
  site.id = s.ids.next(ctx.now());
  site.name = req<std::string>(p, "name");
  site.role = field_or(p, "role", SiteRole::primary);
  site.status = site.role == SiteRole::primary ? SiteStatus::active : SiteStatus::standby;
  site.replication_mode = field_or(p, "replication_mode", ReplicationMode::sync);
  if (auto peer = opt<Id>(p, "peer_site_id")) {
    Site& other = mutable_site(s, *peer);
    if (other.peer_site) raise(ErrorCode::Conflict, "site " + peer->value + " already has a peer");
    if (other.role == site.role) raise(ErrorCode::InvalidArgument, "peer sites need one primary and one secondary");
    site.peer_site = *peer;
    other.peer_site = site.id;
    site.replication_mode = other.replication_mode;
    if (p.contains("replication_mode")) other.replication_mode = site.replication_mode = p.at("replication_mode").get<ReplicationMode>();
  }
  s.sites.emplace(site.id, site);
  return site;
}

Json h_site_failover(CommandContext& ctx, const Json& p) {
  return fail_over_site(ctx.state, ctx.config, req_id(p, "site_id"), FailoverTrigger::manual);
}

Json h_site_repair(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Id id = req_id(p, "site_id");
  Site& site = mutable_site(s, id);
  if (!site.reachable) raise(ErrorCode::SiteUnavailable, "site is still unreachable: " + id.value);
  if (site.status != SiteStatus::failed) raise(ErrorCode::WrongState, "only failed sites are repaired");
  site.status = SiteStatus::standby;
  std::size_t resynced = 0;
  for (const auto& [vid, v] : s.blocks.volumes())
    if (v.replicated && !v.lost && !v.peer_connected && v.peer_site == id) {
      s.blocks.reconnect(vid);
      ++resynced;
    }
  for (auto& [fid, f] : s.farms)
    if (f.dr && (f.primary_site == id || f.dr->secondary_site == id)) f.degraded = false;
  Json out = site;
  out["resynced_volumes"] = resynced;
  return out;
}

Json h_pool_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Id site = req_id(p, "site_id");
  mutable_site(s, site);
  ServerPool pool{s.ids.next(ctx.now()), req<std::string>(p, "name"), site, {}, field_or(p, "overcommit_ratio", ctx.config.overcommit_ratio)};
  s.pools.add_pool(pool);
  return s.pools.pool(pool.id);
}

Json h_host_add(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Host h;
  h.id = s.ids.next(ctx.now());
  h.name = field_or<std::string>(p, "name", h.id.value);
  h.pool_id = req_id(p, "pool_id");
  h.vcpu_capacity = req<int>(p, "vcpu");
  h.memory_capacity_gib = req<std::int64_t>(p, "memory_gib");
  h.disk_capacity_gib = req<std::int64_t>(p, "disk_gib");
  h.last_heartbeat = ctx.now();
  s.pools.add_host(h);
  return s.pools.host(h.id);
}

const Farm* farm_allotting(const ControlState& s, const Id& host_id) {
  for (const auto& [_, f] : s.farms) {
    if (std::find(f.allotted_hosts.begin(), f.allotted_hosts.end(), host_id) != f.allotted_hosts.end()) return &f;
    if (f.dr && std::find(f.dr->secondary_allotment.begin(), f.dr->secondary_allotment.end(), host_id) !=
                    f.dr->secondary_allotment.end())
      return &f;
  }
  return nullptr;
}

Json h_host_drain(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Id host_id = req_id(p, "host_id");
  const Host& host = s.pools.host(host_id);
  s.pools.set_draining(host_id, true);
  PoolSnapshot snap = make_snapshot(s.pools, host.pool_id, s.instances);
  if (const Farm* f = farm_allotting(s, host_id)) {
    const auto& allot = f->dr && std::find(f->dr->secondary_allotment.begin(), f->dr->secondary_allotment.end(), host_id) !=
                                     f->dr->secondary_allotment.end()
                            ? f->dr->secondary_allotment
                            : f->allotted_hosts;
    std::erase_if(snap.hosts, [&](const HostView& h) { return std::find(allot.begin(), allot.end(), h.host_id) == allot.end(); });
  }
  std::vector<DrainItem> items;
  for (const auto& [iid, inst] : s.instances)
    if (inst.host_id == host_id && inst.state == LifecycleState::Running)
      items.push_back({iid, inst.spec, inst.anti_affinity_group});
  const auto moves = plan_drain(host_id, snap, items);
  Json out = Json::array();
  for (const auto& m : moves) {
    Instance& inst = mutable_instance(s, m.instance_id);
    inst = s.pools.migrate(inst, m.host_id);
    ctx.touch(inst.farm_id);
    out.push_back(Json{{"instance_id", m.instance_id}, {"host_id", m.host_id}});
  }
  return Json{{"host_id", host_id}, {"moves", std::move(out)}};
}

Json h_host_undrain(CommandContext& ctx, const Json& p) {
  const Id host_id = req_id(p, "host_id");
  ctx.state.pools.set_draining(host_id, false);
  return ctx.state.pools.host(host_id);
}

// ---- templates -------------------------------------------------------------

ResourceOwner template_register_owner(const ControlState&, const Json& p, const Id& actor) {
  return {opt<Id>(p, "project_id"), actor};
}

ResourceOwner template_owner(const ControlState& s, const Json& p, const Id&) {
  const Template& t = s.templates.get(req_id(p, "template_id"));
  return {t.project_id, t.owner_user_id};
}

Json h_template_register(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Template t;
  t.id = s.ids.next(ctx.now());
  t.name = req<std::string>(p, "name");
  t.owner_user_id = ctx.actor ? *ctx.actor : Id{"system"};
  t.project_id = opt<Id>(p, "project_id");
  if (t.project_id) s.auth.project(*t.project_id);
  const bool admin = !ctx.actor || s.auth.user(*ctx.actor).role == Role::admin;
  t.origin = admin ? field_or(p, "origin", t.project_id ? TemplateOrigin::user_built : TemplateOrigin::preconfigured)
                   : TemplateOrigin::user_built;
  t.os_label = field_or<std::string>(p, "os_label", "linux");
  t.software_stack = field_or(p, "software_stack", std::vector<std::string>{t.os_label});
  t.default_spec = req<ResourceSpec>(p, "spec");
  t.default_workload_class = field_or(p, "workload_class", WorkloadClass::development);
  t.published = t.origin == TemplateOrigin::preconfigured;
  s.templates.add(t);
  return s.templates.get(t.id);
}

Json h_template_update(CommandContext& ctx, const Json& p) {
  const Id id = req_id(p, "template_id");
  ctx.state.templates.update_spec(id, req<ResourceSpec>(p, "spec"));
  return ctx.state.templates.get(id);
}

Json h_template_publish(CommandContext& ctx, const Json& p) {
  const Id id = req_id(p, "template_id");
  ctx.state.templates.set_published(id, field_or(p, "published", true));
  return ctx.state.templates.get(id);
}

// ---- farms -----------------------------------------------------------------

std::vector<Id> allot_hosts(const ControlState& s, const Id& pool_id, int count) {
  std::set<Id> taken;
  for (const auto& [_, f] : s.farms) {
    taken.insert(f.allotted_hosts.begin(), f.allotted_hosts.end());
    if (f.dr) taken.insert(f.dr->secondary_allotment.begin(), f.dr->secondary_allotment.end());
  }
  std::vector<Id> out;
  for (const auto& hid : s.pools.pool(pool_id).host_ids) {
    if (static_cast<int>(out.size()) == count) break;
    if (!taken.contains(hid)) out.push_back(hid);
  }
  if (static_cast<int>(out.size()) < count)
    raise(ErrorCode::CapacityExhausted, "pool " + pool_id.value + " has only " + std::to_string(out.size()) +
                                            " unallotted hosts, farm needs " + std::to_string(count));
  return out;
}

std::set<int> pool_vlans(const ControlState& s, const Id& site) {
  std::set<int> out;
  for (const auto& [_, p] : s.net.pools())
    if (p.site_id == site) out.insert(p.vlan_id);
  return out;
}

Json h_farm_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Farm f;
  f.id = s.ids.next(ctx.now());
  f.project_id = req_id(p, "project_id");
  s.auth.project(f.project_id);
  f.name = field_or<std::string>(p, "name", f.id.value);
  f.quota = req<FarmQuota>(p, "quota");
  validate(f.quota);
  f.pool_id = f.primary_pool = req_id(p, "pool_id");
  f.site_id = f.primary_site = s.pools.pool(f.pool_id).site_id;
  const Site& site = s.sites.at(f.site_id);
  if (site.status != SiteStatus::active) raise(ErrorCode::WrongState, "farms are created on the active site");
  f.allotted_hosts = allot_hosts(s, f.pool_id, f.quota.max_hosts);
  if (auto sec = opt<Id>(p, "secondary_pool_id")) {
    const Id sec_site = s.pools.pool(*sec).site_id;
    if (site.peer_site != sec_site) raise(ErrorCode::InvalidArgument, "secondary pool must be on the peer site");
    f.dr = DrPair{sec_site, *sec, allot_hosts(s, *sec, f.quota.max_hosts)};
  }
  std::set<int> taken = pool_vlans(s, f.site_id);
  if (f.dr) {
    auto more = pool_vlans(s, f.dr->secondary_site);
    taken.insert(more.begin(), more.end());
    for (const auto& [_, other] : s.farms)
      if (other.primary_site == f.dr->secondary_site || (other.dr && other.dr->secondary_site == f.dr->secondary_site))
        taken.insert(other.vlan_ids.begin(), other.vlan_ids.end());
  }
  const auto vlans = allocate_vlans(s.farms, f.site_id, static_cast<std::size_t>(std::max(1, ctx.config.vlans_per_farm)), taken);
  f.vlan_ids = {vlans.begin(), vlans.end()};
  f.share = FarmShare{f.quota.block_quota_gib, 0};
  const Id fid = f.id;
  s.farms.emplace(fid, f);
  if (auto cidr = opt<std::string>(p, "network_cidr")) {
    NetworkPool np;
    np.id = s.ids.next(ctx.now());
    np.name = f.name + "-net";
    np.site_id = f.site_id;
    np.cidr = Cidr::parse(*cidr);
    np.vlan_id = *f.vlan_ids.begin();
    np.farm_id = fid;
    s.net.add_pool(np);
  }
  ctx.touch(fid);
  return s.farms.at(fid);
}

Json h_farm_share_set(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Farm& f = mutable_farm(s, req_id(p, "farm_id"));
  const auto used = req<std::int64_t>(p, "used_gib");
  if (used < 0) raise(ErrorCode::InvalidArgument, "share usage must be >= 0");
  if (used > f.share.quota_gib || s.blocks.farm_usage_gib(f.id) + used > f.quota.block_quota_gib)
    raise(ErrorCode::QuotaExceeded, "farm share exceeds the block quota");
  f.share.used_gib = used;
  ctx.touch(f.id);
  return f.share;
}

// ---- instances -------------------------------------------------------------

Json h_instance_create(CommandContext& ctx, const Json& p) {
  auto created = create_instances(ctx, p);
  std::vector<Id> ids;
  for (const auto& i : created) ids.push_back(i.id);
  return Json{{"instances", instances_json(ctx.state, ids)}};
}

Json h_instance_provision(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  auto created = create_instances(ctx, p);
  const auto networks = opt<std::vector<Id>>(p, "networks");
  const auto volume = opt<std::int64_t>(p, "volume_gib");
  const bool start = field_or(p, "start", true);
  const Farm& farm = farm_of(s, req_id(p, "farm_id"));
  PoolSnapshot snap = farm_snapshot(s, farm);
  std::vector<Id> ids;
  for (const auto& c : created) {
    Instance& inst = s.instances.at(c.id);
    attribute(ctx, inst, networks, volume);
    if (start) start_on(s, inst, snap);
    ids.push_back(c.id);
  }
  return Json{{"instances", instances_json(s, ids)}};
}

Json h_instance_attribute(CommandContext& ctx, const Json& p) {
  Instance& inst = mutable_instance(ctx.state, req_id(p, "instance_id"));
  attribute(ctx, inst, opt<std::vector<Id>>(p, "networks"), opt<std::int64_t>(p, "volume_gib"));
  ctx.touch(inst.farm_id);
  return instance_json(ctx.state, inst);
}

Json h_instance_start(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Instance& inst = mutable_instance(s, req_id(p, "instance_id"));
  PoolSnapshot snap = farm_snapshot(s, farm_of(s, inst.farm_id));
  start_on(s, inst, snap);
  ctx.touch(inst.farm_id);
  return instance_json(s, inst);
}

Json h_instance_stop(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Instance& inst = mutable_instance(s, req_id(p, "instance_id"));
  const auto host = inst.host_id;
  Instance stopped = transition(inst, LifecycleEvent::stop);
  if (host) s.pools.release(*host, inst.spec);
  inst = std::move(stopped);
  ctx.touch(inst.farm_id);
  return instance_json(s, inst);
}

Json h_instance_migrate(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Instance& inst = mutable_instance(s, req_id(p, "instance_id"));
  if (inst.state != LifecycleState::Running)
    raise(ErrorCode::IllegalTransition, "illegal transition: " + std::string(enum_name(inst.state)) + " on migrate_begin");
  const Farm& farm = farm_of(s, inst.farm_id);
  const auto& allot = farm.active_allotment();
  Id target;
  if (auto t = opt<Id>(p, "target_host")) {
    target = *t;
    if (s.pools.has_host(target) && s.pools.host(target).pool_id == farm.pool_id &&
        std::find(allot.begin(), allot.end(), target) == allot.end())
      raise(ErrorCode::InvalidArgument, "target host is outside the farm allotment");
  } else {
    PlacementRequest req = placement_for(farm, inst);
    std::erase(req.allowed_hosts, *inst.host_id);
    if (req.allowed_hosts.empty()) raise(ErrorCode::CapacityExhausted, "no other host in the farm allotment");
    PoolSnapshot snap = farm_snapshot(s, farm);
    target = place(req, snap).host_id;
  }
  inst = s.pools.migrate(inst, target);
  ctx.touch(inst.farm_id);
  return instance_json(s, inst);
}

Json h_instance_destroy(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Instance& inst = mutable_instance(s, req_id(p, "instance_id"));
  Instance gone = transition(inst, LifecycleEvent::destroy);
  s.net.release_instance(inst.id);
  s.blocks.detach_instance(inst.id);
  mutable_farm(s, inst.farm_id).remote_access.erase(inst.id);
  inst = std::move(gone);
  ctx.touch(inst.farm_id);
  return instance_json(s, inst);
}

Json h_instance_remote_access(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Instance& inst = instance_of(s, req_id(p, "instance_id"));
  if (inst.state != LifecycleState::Attributed && inst.state != LifecycleState::Running)
    raise(ErrorCode::WrongState, "remote access is assigned to Attributed or Running instances");
  const RemoteAccess ra = make_remote_access(inst.id, field_or(p, "agent", false), field_or(p, "vdi", false), field_or(p, "desktop", false));
  mutable_farm(s, inst.farm_id).remote_access[inst.id] = ra;
  ctx.touch(inst.farm_id);
  return ra;
}

Json h_instance_monitoring(CommandContext& ctx, const Json& p) {
  Instance& inst = mutable_instance(ctx.state, req_id(p, "instance_id"));
  if (inst.state == LifecycleState::Destroyed) raise(ErrorCode::WrongState, "instance is destroyed");
  inst.monitoring = field_or(p, "monitoring", inst.monitoring);
  inst.backup = field_or(p, "backup", inst.backup);
  ctx.touch(inst.farm_id);
  return instance_json(ctx.state, inst);
}

// ---- networks --------------------------------------------------------------

Json h_net_pool_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  NetworkPool np;
  np.id = s.ids.next(ctx.now());
  np.name = req<std::string>(p, "name");
  np.site_id = req_id(p, "site_id");
  mutable_site(s, np.site_id);
  np.cidr = Cidr::parse(req<std::string>(p, "cidr"));
  np.farm_id = opt<Id>(p, "farm_id");
  const std::set<int> used = pool_vlans(s, np.site_id);
  if (auto v = opt<int>(p, "vlan_id")) {
    np.vlan_id = *v;
    for (const auto& [fid, f] : s.farms)
      if (f.vlan_ids.contains(*v) && fid != np.farm_id && (f.primary_site == np.site_id || (f.dr && f.dr->secondary_site == np.site_id)))
        raise(ErrorCode::Conflict, "vlan " + std::to_string(*v) + " belongs to farm " + fid.value);
  } else if (np.farm_id) {
    Farm& f = mutable_farm(s, *np.farm_id);
    auto free = std::find_if(f.vlan_ids.begin(), f.vlan_ids.end(), [&](int v) { return !used.contains(v); });
    if (free != f.vlan_ids.end()) {
      np.vlan_id = *free;
    } else {
      np.vlan_id = allocate_vlans(s.farms, np.site_id, 1, used).front();
      f.vlan_ids.insert(np.vlan_id);
    }
  } else {
    np.vlan_id = allocate_vlans(s.farms, np.site_id, 1, used).front();
  }
  if (np.farm_id) {
    Farm& f = mutable_farm(s, *np.farm_id);
    f.vlan_ids.insert(np.vlan_id);
    ctx.touch(f.id);
  }
  s.net.add_pool(np);
  return s.net.pool(np.id);
}

ResourceOwner firewall_create_owner(const ControlState& s, const Json& p, const Id& actor) {
  const auto kind = req<ScopeKind>(p, "scope_kind");
  const Id scope = req_id(p, "scope_id");
  if (kind == ScopeKind::instance) return farm_owner(s, instance_of(s, scope).farm_id, actor);
  return farm_owner(s, scope, actor);
}

Id scope_farm(const ControlState& s, ScopeKind kind, const Id& scope) {
  return kind == ScopeKind::instance ? instance_of(s, scope).farm_id : farm_of(s, scope).id;
}

ResourceOwner firewall_owner(const ControlState& s, const Json& p, const Id&) {
  const Id rid = req_id(p, "rule_id");
  auto it = s.net.firewall_rules().find(rid);
  if (it == s.net.firewall_rules().end()) raise(ErrorCode::NotFound, "unknown firewall rule: " + rid.value);
  return farm_owner(s, scope_farm(s, it->second.scope_kind, it->second.scope_id), creator_of(s, rid));
}

Json h_firewall_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  FirewallRule r = p.get<FirewallRule>();
  r.id = s.ids.next(ctx.now());
  const Id farm = scope_farm(s, r.scope_kind, r.scope_id);
  s.net.add_firewall_rule(r);
  if (ctx.actor) s.creators[r.id] = *ctx.actor;
  ctx.touch(farm);
  return r;
}

Json h_firewall_delete(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Id rid = req_id(p, "rule_id");
  const FirewallRule r = s.net.firewall_rules().at(rid);
  s.net.remove_firewall_rule(rid);
  s.creators.erase(rid);
  ctx.touch(scope_farm(s, r.scope_kind, r.scope_id));
  return Json{{"deleted", rid}};
}

ResourceOwner lb_owner(const ControlState& s, const Json& p, const Id&) {
  const LbRule& r = s.net.lb_rule(req_id(p, "rule_id"));
  return farm_owner(s, r.farm_id, creator_of(s, r.id));
}

Json h_lb_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  LbRule r = p.get<LbRule>();
  r.id = s.ids.next(ctx.now());
  r.farm_id = req_id(p, "farm_id");
  farm_of(s, r.farm_id);
  for (const auto& b : r.backend_instance_ids)
    if (instance_of(s, b).farm_id != r.farm_id) raise(ErrorCode::CrossFarmNetwork, "backend " + b.value + " is in another farm");
  const Id id = r.id;
  s.net.add_lb_rule(std::move(r));
  if (ctx.actor) s.creators[id] = *ctx.actor;
  ctx.touch(s.net.lb_rule(id).farm_id);
  return s.net.lb_rule(id);
}

Json h_lb_pick(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const LbRule& r = s.net.lb_rule(req_id(p, "rule_id"));
  std::vector<Id> live;
  for (const auto& b : r.backend_instance_ids)
    if (auto it = s.instances.find(b); it != s.instances.end() && it->second.state == LifecycleState::Running) live.push_back(b);
  std::uint64_t ordinal = 0;
  for (const auto& [_, n] : r.pick_counts) ordinal += n;
  const Id chosen = lb_pick(r, ordinal, live);
  s.net.record_pick(r.id, chosen);
  return Json{{"rule_id", r.id}, {"backend", chosen}};
}

// ---- storage ---------------------------------------------------------------

ResourceOwner volume_owner(const ControlState& s, const Json& p, const Id&) {
  const BlockVolume& v = s.blocks.get(req_id(p, "volume_id"));
  return farm_owner(s, v.farm_id, creator_of(s, v.id));
}

Json volume_json(const BlockVolume& v) {
  return Json{{"id", v.id},
              {"farm_id", v.farm_id},
              {"name", v.name},
              {"size_gib", v.size_gib},
              {"site_id", v.site_id},
              {"attached_instance", v.attached_instance},
              {"replicated", v.replicated},
              {"mode", v.mode},
              {"peer_site", v.peer_site},
              {"peer_connected", v.peer_connected},
              {"journal_length", v.journal.size()},
              {"peer_journal_length", v.peer_journal.size()},
              {"pending", v.pending.size()},
              {"lost", v.lost}};
}

Json h_volume_create(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Farm& f = farm_of(s, req_id(p, "farm_id"));
  BlockVolume v;
  v.id = s.ids.next(ctx.now());
  v.farm_id = f.id;
  v.name = field_or<std::string>(p, "name", v.id.value);
  v.size_gib = req<std::int64_t>(p, "size_gib");
  v.site_id = f.site_id;
  const bool replicate = field_or(p, "replicated", f.dr.has_value());
  if (replicate) {
    if (!f.dr) raise(ErrorCode::InvalidArgument, "farm has no disaster-recovery peer");
    v.replicated = true;
    v.peer_site = f.site_id == f.dr->secondary_site ? f.primary_site : f.dr->secondary_site;
    v.mode = s.sites.at(f.site_id).replication_mode;
  }
  if (auto inst = opt<Id>(p, "instance_id")) {
    if (instance_of(s, *inst).farm_id != f.id) raise(ErrorCode::InvalidArgument, "instance belongs to another farm");
    v.attached_instance = *inst;
  }
  s.blocks.create(v, f.quota.block_quota_gib, f.share.used_gib);
  if (ctx.actor) s.creators[v.id] = *ctx.actor;
  ctx.touch(f.id);
  return volume_json(s.blocks.get(v.id));
}

Json h_volume_attach(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const BlockVolume& v = s.blocks.get(req_id(p, "volume_id"));
  const Instance& inst = instance_of(s, req_id(p, "instance_id"));
  if (inst.farm_id != v.farm_id) raise(ErrorCode::InvalidArgument, "instance belongs to another farm");
  if (inst.state == LifecycleState::Destroyed) raise(ErrorCode::WrongState, "instance is destroyed");
  s.blocks.attach(v.id, inst.id);
  ctx.touch(v.farm_id);
  return volume_json(v);
}

Json h_volume_write(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const BlockVolume& v = s.blocks.get(req_id(p, "volume_id"));
  const bool site_ok = s.sites.at(v.site_id).reachable;
  const bool peer_ok = v.peer_site && s.sites.at(*v.peer_site).reachable;
  const WriteAck ack = s.blocks.write(v.id, req<std::int64_t>(p, "block"), field_or<std::string>(p, "hash", ""), site_ok,
                                      peer_ok, ctx.config.async_queue_limit);
  ctx.touch(v.farm_id);
  return Json{{"volume_id", ack.volume_id}, {"sequence", ack.sequence}, {"mirrored", ack.mirrored}};
}

ResourceOwner object_put_owner(const ControlState& s, const Json& p, const Id& actor) {
  const auto key = req<std::string>(p, "key");
  if (const StoredObject* o = s.objects.find(key)) return farm_owner(s, o->farm_id, o->creator);
  return farm_owner(s, req_id(p, "farm_id"), actor);
}

ResourceOwner object_owner(const ControlState& s, const Json& p, const Id&) {
  const auto key = req<std::string>(p, "key");
  const StoredObject* o = s.objects.find(key);
  if (!o) raise(ErrorCode::NotFound, "no such object: " + key);
  return farm_owner(s, o->farm_id, o->creator);
}

Json h_object_put(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Farm& f = farm_of(s, req_id(p, "farm_id"));
  const auto key = req<std::string>(p, "key");
  const auto size = req<std::int64_t>(p, "size_bytes");
  const auto hash = field_or<std::string>(p, "content_hash", sha256_hex(key + "#" + std::to_string(size)));
  const StoredObject& o = s.objects.put(key, f.id, ctx.actor ? *ctx.actor : Id{"system"}, size, hash, f.quota.object_quota_gib * kGiB);
  ctx.touch(f.id);
  return o;
}

Json h_object_delete(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const auto key = req<std::string>(p, "key");
  const StoredObject* o = s.objects.find(key);
  if (!o) raise(ErrorCode::NotFound, "no such object: " + key);
  const Id farm = o->farm_id;
  s.objects.remove(key);
  ctx.touch(farm);
  return Json{{"deleted", key}};
}

Json h_object_node_add(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  StorageNode n;
  n.id = s.ids.next(ctx.now());
  n.name = field_or<std::string>(p, "name", n.id.value);
  n.capacity_bytes = req<std::int64_t>(p, "capacity_gib") * kGiB;
  s.objects.add_node(n);
  return s.objects.node(n.id);
}

// ---- metering --------------------------------------------------------------

void ingest_one(CommandContext& ctx, const Json& sample) {
  ControlState& s = ctx.state;
  const Id iid = req_id(sample, "instance_id");
  auto it = s.instances.find(iid);
  if (it == s.instances.end()) raise(ErrorCode::UnknownInstance, "unknown instance: " + iid.value);
  const SimTime at = opt<std::int64_t>(sample, "at_ms").has_value() ? sim_time_ms(req<std::int64_t>(sample, "at_ms")) : ctx.now();
  s.meter.ingest(it->second, at, req<double>(sample, "cpu_pct"), ctx.config.meter_retention);
}

Json h_meter_ingest(CommandContext& ctx, const Json& p) {
  ingest_one(ctx, p);
  return Json{{"ingested", 1}};
}

Json h_meter_ingest_batch(CommandContext& ctx, const Json& p) {
  const Json& samples = member(p, "samples");
  if (!samples.is_array()) raise(ErrorCode::MalformedCommand, "samples must be an array");
  // Validate everything first; the command is hot and may not half-apply.
  for (const auto& smp : samples) {
    const Id iid = req_id(smp, "instance_id");
    auto it = ctx.state.instances.find(iid);
    if (it == ctx.state.instances.end()) raise(ErrorCode::UnknownInstance, "unknown instance: " + iid.value);
    if (!it->second.ever_started) raise(ErrorCode::UnknownInstance, "instance never ran: " + iid.value);
    quantize_pct(req<double>(smp, "cpu_pct"));
  }
  std::map<Id, SimTime> last;
  for (const auto& [id, series] : ctx.state.meter.series())
    if (!series.samples.empty()) last[id] = series.samples.back().at;
  for (const auto& smp : samples) {
    const Id iid = req_id(smp, "instance_id");
    const SimTime at = opt<std::int64_t>(smp, "at_ms") ? sim_time_ms(req<std::int64_t>(smp, "at_ms")) : ctx.now();
    if (auto it = last.find(iid); it != last.end() && at < it->second)
      raise(ErrorCode::InvalidArgument, "sample timestamps must not go backwards");
    last[iid] = at;
  }
  for (const auto& smp : samples) ingest_one(ctx, smp);
  return Json{{"ingested", samples.size()}};
}

// ---- simulator -------------------------------------------------------------

void fail_instances_on_down_hosts(ControlState& s, Json& report) {
  for (auto& [iid, inst] : s.instances) {
    if (!inst.host_id || !holds_host(inst.state)) continue;
    const Host& h = s.pools.host(*inst.host_id);
    if (h.liveness != Liveness::down) continue;
    const Id host = *inst.host_id;
    inst = transition(inst, LifecycleEvent::fail);
    s.pools.release(host, inst.spec);
    report["failed_instances"].push_back(iid);
  }
}

// Sweeps every pool, fails over sites whose hosts all went down, then fails
// the instances still stranded on down hosts.
Json sweep(ControlState& s, const Config& cfg) {
  Json report{{"newly_down", Json::array()}, {"failovers", Json::array()}, {"failed_instances", Json::array()}};
  for (const auto& [pid, _] : s.pools.pools()) {
    const SweepResult r = s.pools.heartbeat_sweep(pid, s.clock.now(), cfg.miss_limit, cfg.heartbeat_interval);
    for (const auto& h : r.newly_down) report["newly_down"].push_back(h);
  }
  if (!report["newly_down"].empty()) {
    std::vector<Id> promote;
    for (const auto& [sid, site] : s.sites) {
      if (site.status != SiteStatus::active || !site.peer_site) continue;
      const Site& peer = s.sites.at(*site.peer_site);
      if (peer.status != SiteStatus::standby || !peer.reachable) continue;
      bool any = false, all_down = true;
      for (const auto& [hid, h] : s.pools.hosts())
        if (h.site_id == sid) {
          any = true;
          if (h.liveness != Liveness::down) all_down = false;
        }
      if (any && all_down) promote.push_back(*site.peer_site);
    }
    for (const auto& target : promote) report["failovers"].push_back(fail_over_site(s, cfg, target, FailoverTrigger::automatic));
  }
  fail_instances_on_down_hosts(s, report);
  return report;
}

void heartbeat_all(ControlState& s) {
  std::vector<Id> ids;
  for (const auto& [hid, h] : s.pools.hosts())
    if (h.powered && s.sites.at(h.site_id).reachable) ids.push_back(hid);
  for (const auto& hid : ids) s.pools.heartbeat(hid, s.clock.now());
}

Json h_sim_tick(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const auto ms = req<std::int64_t>(p, "ms");
  if (ms < 0) raise(ErrorCode::InvalidArgument, "tick must be >= 0 ms");
  const std::int64_t interval = ctx.config.heartbeat_interval.count();
  const std::int64_t start = to_ms(s.clock.now());
  const std::int64_t end = start + ms;
  Json events = Json::array();
  for (std::int64_t t = (start / interval + 1) * interval; t <= end; t += interval) {
    s.clock.set(sim_time_ms(t));
    heartbeat_all(s);
    Json r = sweep(s, ctx.config);
    if (!r["newly_down"].empty() || !r["failovers"].empty()) {
      r["at_ms"] = t;
      events.push_back(std::move(r));
    }
  }
  s.clock.set(sim_time_ms(end));
  return Json{{"now_ms", end}, {"events", std::move(events)}};
}

Json h_sim_kill_host(CommandContext& ctx, const Json& p) {
  ctx.state.pools.set_powered(req_id(p, "host_id"), false);
  return ctx.state.pools.host(req_id(p, "host_id"));
}

Json h_sim_revive_host(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  const Id id = req_id(p, "host_id");
  s.pools.set_powered(id, true);
  if (s.sites.at(s.pools.host(id).site_id).reachable) s.pools.heartbeat(id, ctx.now());
  return s.pools.host(id);
}

Json h_sim_kill_site(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Site& site = mutable_site(s, req_id(p, "site_id"));
  site.reachable = false;
  for (const auto& [hid, h] : s.pools.hosts())
    if (h.site_id == site.id) s.pools.set_powered(hid, false);
  return site;
}

Json h_sim_revive_site(CommandContext& ctx, const Json& p) {
  ControlState& s = ctx.state;
  Site& site = mutable_site(s, req_id(p, "site_id"));
  site.reachable = true;
  for (const auto& [hid, h] : s.pools.hosts())
    if (h.site_id == site.id) {
      s.pools.set_powered(hid, true);
      s.pools.heartbeat(hid, ctx.now());
    }
  return site;
}

Json h_sim_kill_node(CommandContext& ctx, const Json& p) {
  ctx.state.objects.set_node_live(req_id(p, "node_id"), false);
  return ctx.state.objects.node(req_id(p, "node_id"));
}

Json h_sim_revive_node(CommandContext& ctx, const Json& p) {
  ctx.state.objects.set_node_live(req_id(p, "node_id"), true);
  return ctx.state.objects.node(req_id(p, "node_id"));
}

// ---- table -----------------------------------------------------------------

using S = Surface;
using A = Action;

const std::array kCommands{
    CommandSpec{"user.create", S::framework, A::modify, admin_only, h_user_create},
    CommandSpec{"project.create", S::framework, A::modify, admin_only, h_project_create},
    CommandSpec{"project.member.add", S::framework, A::modify, admin_only, h_project_member_add},
    CommandSpec{"auth.login", S::framework, A::modify, admin_only, h_login, false, false},
    CommandSpec{"site.create", S::framework, A::modify, admin_only, h_site_create},
    CommandSpec{"site.failover", S::framework, A::modify, admin_only, h_site_failover},
    CommandSpec{"site.repair", S::framework, A::modify, admin_only, h_site_repair},
    CommandSpec{"pool.create", S::framework, A::modify, admin_only, h_pool_create},
    CommandSpec{"host.add", S::framework, A::modify, admin_only, h_host_add},
    CommandSpec{"host.drain", S::framework, A::modify, admin_only, h_host_drain},
    CommandSpec{"host.undrain", S::framework, A::modify, admin_only, h_host_undrain},
    CommandSpec{"template.register", S::image, A::modify, template_register_owner, h_template_register},
    CommandSpec{"template.update", S::image, A::modify, template_owner, h_template_update},
    CommandSpec{"template.publish", S::image, A::modify, admin_only, h_template_publish},
    CommandSpec{"farm.create", S::framework, A::modify, admin_only, h_farm_create},
    CommandSpec{"farm.share.set", S::storage, A::modify, farm_create_owner, h_farm_share_set},
    CommandSpec{"instance.create", S::framework, A::modify, farm_create_owner, h_instance_create},
    CommandSpec{"instance.provision", S::framework, A::modify, farm_create_owner, h_instance_provision},
    CommandSpec{"instance.attribute", S::framework, A::modify, instance_owner, h_instance_attribute},
    CommandSpec{"instance.start", S::framework, A::modify, instance_owner, h_instance_start},
    CommandSpec{"instance.stop", S::framework, A::modify, instance_owner, h_instance_stop},
    CommandSpec{"instance.migrate", S::framework, A::modify, instance_owner, h_instance_migrate},
    CommandSpec{"instance.destroy", S::framework, A::modify, instance_owner, h_instance_destroy},
    CommandSpec{"instance.remote_access", S::network_remote, A::modify, instance_owner, h_instance_remote_access},
    CommandSpec{"instance.monitoring", S::framework, A::modify, instance_owner, h_instance_monitoring},
    CommandSpec{"net.pool.create", S::network_remote, A::modify, admin_only, h_net_pool_create},
    CommandSpec{"firewall.create", S::network_remote, A::modify, firewall_create_owner, h_firewall_create},
    CommandSpec{"firewall.delete", S::network_remote, A::modify, firewall_owner, h_firewall_delete},
    CommandSpec{"lb.create", S::network_remote, A::modify, farm_create_owner, h_lb_create},
    CommandSpec{"lb.pick", S::network_remote, A::modify, lb_owner, h_lb_pick},
    CommandSpec{"volume.create", S::storage, A::modify, farm_create_owner, h_volume_create},
    CommandSpec{"volume.attach", S::storage, A::modify, volume_owner, h_volume_attach},
    CommandSpec{"volume.write", S::storage, A::modify, volume_owner, h_volume_write, true},
    CommandSpec{"object.put", S::storage, A::modify, object_put_owner, h_object_put, true},
    CommandSpec{"object.delete", S::storage, A::modify, object_owner, h_object_delete, true},
    CommandSpec{"object.node.add", S::storage, A::modify, admin_only, h_object_node_add},
    CommandSpec{"meter.ingest", S::framework, A::modify, admin_only, h_meter_ingest, true},
    CommandSpec{"meter.ingest_batch", S::framework, A::modify, admin_only, h_meter_ingest_batch, true},
    CommandSpec{"sim.tick", S::framework, A::modify, admin_only, h_sim_tick},
    CommandSpec{"sim.kill_host", S::framework, A::modify, admin_only, h_sim_kill_host},
    CommandSpec{"sim.revive_host", S::framework, A::modify, admin_only, h_sim_revive_host},
    CommandSpec{"sim.kill_site", S::framework, A::modify, admin_only, h_sim_kill_site},
    CommandSpec{"sim.revive_site", S::framework, A::modify, admin_only, h_sim_revive_site},
    CommandSpec{"sim.kill_node", S::framework, A::modify, admin_only, h_sim_kill_node},
    CommandSpec{"sim.revive_node", S::framework, A::modify, admin_only, h_sim_revive_node},
};

}  // namespace

std::span<const CommandSpec> command_table() { return kCommands; }

const CommandSpec* find_command(std::string_view name) {
  for (const auto& c : kCommands)
    if (c.name == name) return &c;
  return nullptr;
}

std::string credential_salt(std::uint64_t seed, const std::string& username) {
  return sha256_hex(std::to_string(seed) + "|" + username).substr(0, 32);
}

Json instance_json(const ControlState& s, const Instance& inst) {
  Json j = inst;
  Json nets = Json::array();
  for (const auto& a : s.net.assignments_of(inst.id)) nets.push_back(a);
  j["networks"] = std::move(nets);
  if (auto f = s.farms.find(inst.farm_id); f != s.farms.end())
    if (auto ra = f->second.remote_access.find(inst.id); ra != f->second.remote_access.end()) j["remote_access"] = ra->second;
  return j;
}

Json fail_over_site(ControlState& s, const Config& cfg, const Id& site_id, FailoverTrigger trigger) {
  (void)cfg;
  Site& target = mutable_site(s, site_id);
  if (target.status == SiteStatus::active) raise(ErrorCode::AlreadyActive, "site is already active: " + site_id.value);
  if (target.status != SiteStatus::standby || !target.reachable || !target.peer_site)
    raise(ErrorCode::StandbyNotReady, "site cannot take over: " + site_id.value);
  Site& old = mutable_site(s, *target.peer_site);
  const Id old_id = old.id;

  Json farms = Json::array();
  for (auto& [fid, farm] : s.farms) {
    if (!farm.dr || farm.site_id != old_id) continue;
    const bool to_secondary = site_id == farm.dr->secondary_site;
    farm.site_id = site_id;
    farm.pool_id = to_secondary ? farm.dr->secondary_pool : farm.primary_pool;
    PoolSnapshot snap = make_snapshot(s.pools, farm.pool_id, s.instances);
    Json moved = Json::array(), exhausted = Json::array(), volumes = Json::array();
    for (auto& [iid, inst] : s.instances) {
      if (inst.farm_id != fid || !holds_host(inst.state)) continue;
      const Id old_host = *inst.host_id;
      Instance moving = inst.state == LifecycleState::Migrating ? inst : transition(inst, LifecycleEvent::migrate_begin);
      moving.host_id = old_host;
      try {
        if (farm.active_allotment().empty()) raise(ErrorCode::CapacityExhausted, "no allotted hosts on the standby pool");
        const PlacementDecision d = place(placement_for(farm, inst), snap);
        s.pools.charge(d.host_id, inst.spec);
        apply(snap, d, inst.spec, inst.anti_affinity_group);
        s.pools.release(old_host, inst.spec);
        Instance done = transition(moving, LifecycleEvent::migrate_end);
        done.host_id = d.host_id;
        inst = std::move(done);
        moved.push_back(Json{{"instance_id", iid}, {"host_id", d.host_id}});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CapacityExhausted) throw;
        s.pools.release(old_host, inst.spec);
        inst = transition(moving, LifecycleEvent::fail);
        exhausted.push_back(Json{{"instance_id", iid}, {"error", "CapacityExhausted"}});
      }
    }
    for (const auto& vid : s.blocks.volumes_of_farm(fid)) {
      if (s.blocks.get(vid).site_id != old_id) continue;
      volumes.push_back(s.blocks.fail_over(vid));
    }
    farm.degraded = false;
    farms.push_back(Json{{"farm_id", fid}, {"moved", std::move(moved)}, {"capacity_exhausted", std::move(exhausted)}, {"volumes", std::move(volumes)}});
  }
  target.status = SiteStatus::active;
  old.status = trigger == FailoverTrigger::manual && old.reachable ? SiteStatus::standby : SiteStatus::failed;
  if (old.status == SiteStatus::standby)
    for (const auto& [vid, v] : s.blocks.volumes())
      if (v.replicated && !v.lost && !v.peer_connected && v.peer_site == old_id) s.blocks.reconnect(vid);
  Json report{{"at_ms", to_ms(s.clock.now())},
              {"trigger", trigger},
              {"from_site", old_id},
              {"to_site", site_id},
              {"farms", std::move(farms)}};
  s.failovers.push_back(report);
  return report;
}

Json reconcile(ControlState& s, const Config&) {
  Json report{{"failed_instances", Json::array()}};
  fail_instances_on_down_hosts(s, report);
  const RepairReport repaired = s.objects.repair();
  if (repaired.repaired_keys || !repaired.under_replicated.empty()) report["object_repair"] = repaired;
  Json replication = Json::array();
  for (auto& [fid, farm] : s.farms) {
    if (!farm.dr) continue;
    const Id peer = farm.site_id == farm.primary_site ? farm.dr->secondary_site : farm.primary_site;
    const bool reachable = s.sites.at(peer).reachable && s.sites.at(peer).status != SiteStatus::failed;
    for (const auto& vid : s.blocks.volumes_of_farm(fid)) s.blocks.ship(vid, reachable);
    if (farm.delta_seq == farm.replicated_seq) continue;
    ReplicationReport r{fid, farm.replicated_seq, farm.delta_seq, 0, false};
    if (reachable) {
      farm.standby_state = farm_view(s, fid);
      farm.replicated_seq = farm.delta_seq;
      farm.degraded = false;
      r.shipped = true;
    } else if (s.sites.at(farm.site_id).replication_mode == ReplicationMode::sync) {
      farm.degraded = true;
    }
    r.lag = farm.replication_lag();
    replication.push_back(r);
  }
  if (!replication.empty()) report["replication"] = std::move(replication);
  return report;
}

}  // namespace deskcloud
