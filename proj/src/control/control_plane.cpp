#include "deskcloud/control/control_plane.hpp"

#include <filesystem>

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"
#include "deskcloud/net/firewall.hpp"

namespace deskcloud {

namespace {

constexpr const char* kSnapshotFile = "snapshot.dcs";
constexpr const char* kJournalFile = "journal.log";

struct QueryContext {
  const ControlState& s;
  const Config& cfg;
  const User& user;
};

using QueryFn = Json (*)(const QueryContext&, const Json&);

struct QuerySpec {
  std::string_view name;
  Surface surface;
  QueryFn fn;
};

template <class M>
Json values(const M& m) {
  Json out = Json::array();
  for (const auto& [_, v] : m) out.push_back(v);
  return out;
}

std::optional<Id> param_id(const Json& p, const char* key) {
  if (!p.is_object()) return std::nullopt;
  return opt_field<Id>(p, key);
}

Id need_id(const Json& p, const char* key) {
  auto v = param_id(p, key);
  if (!v) raise(ErrorCode::MalformedCommand, std::string("missing parameter '") + key + "'");
  return *v;
}

Json q_templates(const QueryContext& q, const Json&) { return values(q.s.templates.all()); }
Json q_template(const QueryContext& q, const Json& p) { return q.s.templates.get(need_id(p, "id")); }
Json q_farms(const QueryContext& q, const Json&) { return values(q.s.farms); }

Json q_farm(const QueryContext& q, const Json& p) {
  const Id id = need_id(p, "id");
  Json j = farm_of(q.s, id);
  j["usage"] = {{"instances", live_instance_count(q.s, id)},
                {"object_bytes", q.s.objects.farm_usage_bytes(id)},
                {"block_gib", farm_block_usage_gib(q.s, id)},
                {"replication_lag", farm_of(q.s, id).replication_lag()}};
  return j;
}

Json q_instances(const QueryContext& q, const Json& p) {
  const auto farm = param_id(p, "farm_id");
  Json out = Json::array();
  for (const auto& [_, inst] : q.s.instances)
    if (!farm || inst.farm_id == *farm) out.push_back(instance_json(q.s, inst));
  return out;
}

Json q_instance(const QueryContext& q, const Json& p) { return instance_json(q.s, instance_of(q.s, need_id(p, "id"))); }
Json q_sites(const QueryContext& q, const Json&) { return values(q.s.sites); }
Json q_pools(const QueryContext& q, const Json&) { return values(q.s.pools.pools()); }

Json q_hosts(const QueryContext& q, const Json& p) {
  const auto pool = param_id(p, "pool_id");
  Json out = Json::array();
  for (const auto& [_, h] : q.s.pools.hosts())
    if (!pool || h.pool_id == *pool) out.push_back(h);
  return out;
}

Json q_users(const QueryContext& q, const Json&) {
  Json out = Json::array();
  for (const auto& [_, u] : q.s.auth.users()) out.push_back(public_view(u));
  return out;
}

Json q_projects(const QueryContext& q, const Json&) { return values(q.s.auth.projects()); }
Json q_whoami(const QueryContext& q, const Json&) { return public_view(q.user); }

Json q_networks(const QueryContext& q, const Json&) {
  Json out = Json::array();
  for (const auto& [_, p] : q.s.net.pools()) {
    Json j = p;
    j["free"] = p.free_count();
    out.push_back(std::move(j));
  }
  return out;
}

Json q_firewall_rules(const QueryContext& q, const Json&) { return values(q.s.net.firewall_rules()); }
Json q_lb_rules(const QueryContext& q, const Json&) { return values(q.s.net.lb_rules()); }

Json q_firewall_evaluate(const QueryContext& q, const Json& p) {
  const auto kind = p.at("scope_kind").get<ScopeKind>();
  const auto rules = q.s.net.rules_for(kind, need_id(p, "scope_id"));
  Packet pkt{p.at("protocol").get<Protocol>(), field_or(p, "port", 0), Ipv4::parse(p.at("remote_ip").get<std::string>())};
  return Json{{"action", evaluate_firewall(rules, pkt)}};
}

Json volume_summary(const BlockVolume& v) {
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

Json q_volumes(const QueryContext& q, const Json& p) {
  const auto farm = param_id(p, "farm_id");
  Json out = Json::array();
  for (const auto& [_, v] : q.s.blocks.volumes())
    if (!farm || v.farm_id == *farm) out.push_back(volume_summary(v));
  return out;
}

Json q_volume_journal(const QueryContext& q, const Json& p) {
  const BlockVolume& v = q.s.blocks.get(need_id(p, "id"));
  return Json{{"journal", v.journal}, {"peer_journal", v.peer_journal}};
}

Json q_objects(const QueryContext& q, const Json& p) {
  const auto farm = param_id(p, "farm_id");
  Json out = Json::array();
  for (const auto& [_, o] : q.s.objects.objects())
    if (!farm || o.farm_id == *farm) out.push_back(o);
  return out;
}

Json q_object(const QueryContext& q, const Json& p) {
  const auto key = p.at("key").get<std::string>();
  const std::string hash = q.s.objects.get(key);
  Json j = *q.s.objects.find(key);
  j["content_hash"] = hash;
  j["live_replicas"] = q.s.objects.live_replicas(*q.s.objects.find(key));
  return j;
}

Json q_storage_nodes(const QueryContext& q, const Json&) { return values(q.s.objects.nodes()); }

Json q_report(const QueryContext& q, const Json& p) {
  const SimTime start = sim_time_ms(field_or<std::int64_t>(p, "start_ms", 0));
  const SimTime end = sim_time_ms(field_or<std::int64_t>(p, "end_ms", to_ms(q.s.clock.now()) + 1));
  UtilizationReport r = q.s.meter.report(start, end);
  if (auto cls = opt_field<WorkloadClass>(p, "class")) {
    std::erase_if(r.per_instance, [&](const InstanceRow& row) { return row.workload_class != *cls; });
    std::erase_if(r.per_class, [&](const auto& kv) { return kv.first != *cls; });
  }
  if (field_or<std::string>(p, "format", "json") == "csv") return Json{{"csv", report_csv(r)}};
  if (field_or<std::string>(p, "format", "json") == "plot") return report_plot_json(q.s.meter, start, end);
  Json j = r;
  const MeteringPolicy policy{q.cfg.meter_retention, q.cfg.meter_min_samples,
                              std::llround(q.cfg.development_threshold_vcpu * 10000.0), q.cfg.service_minimum_vcpu};
  Json rec = Json::object();
  for (const auto& [cls, st] : r.per_class) {
    try {
      rec[std::string(enum_name(cls))] = recommend_vcpu(st, cls, policy);
    } catch (const Error& e) {
      rec[std::string(enum_name(cls))] = Json{{"error", to_string(e.code())}, {"message", e.what()}};
    }
  }
  j["recommended_vcpu"] = std::move(rec);
  return j;
}

Json q_failovers(const QueryContext& q, const Json&) { return q.s.failovers; }

Json q_digest(const QueryContext& q, const Json&) {
  return Json{{"digest", state_digest(q.s)}, {"mutation_sequence", q.s.mutation_sequence}, {"now_ms", to_ms(q.s.clock.now())}};
}

Json q_violations(const QueryContext& q, const Json&) { return check_invariants(q.s); }

Json q_farm_view(const QueryContext& q, const Json& p) {
  const Id id = need_id(p, "id");
  return Json{{"active", farm_view(q.s, id)}, {"standby", farm_of(q.s, id).standby_state}};
}

const std::array kQueries{
    QuerySpec{"templates", Surface::image, q_templates},
    QuerySpec{"template", Surface::image, q_template},
    QuerySpec{"farms", Surface::framework, q_farms},
    QuerySpec{"farm", Surface::framework, q_farm},
    QuerySpec{"farm_view", Surface::framework, q_farm_view},
    QuerySpec{"instances", Surface::framework, q_instances},
    QuerySpec{"instance", Surface::framework, q_instance},
    QuerySpec{"sites", Surface::framework, q_sites},
    QuerySpec{"pools", Surface::framework, q_pools},
    QuerySpec{"hosts", Surface::framework, q_hosts},
    QuerySpec{"users", Surface::framework, q_users},
    QuerySpec{"projects", Surface::framework, q_projects},
    QuerySpec{"whoami", Surface::framework, q_whoami},
    QuerySpec{"networks", Surface::network_remote, q_networks},
    QuerySpec{"firewall_rules", Surface::network_remote, q_firewall_rules},
    QuerySpec{"firewall_evaluate", Surface::network_remote, q_firewall_evaluate},
    QuerySpec{"lb_rules", Surface::network_remote, q_lb_rules},
    QuerySpec{"volumes", Surface::storage, q_volumes},
    QuerySpec{"volume_journal", Surface::storage, q_volume_journal},
    QuerySpec{"objects", Surface::storage, q_objects},
    QuerySpec{"object", Surface::storage, q_object},
    QuerySpec{"storage_nodes", Surface::storage, q_storage_nodes},
    QuerySpec{"report", Surface::framework, q_report},
    QuerySpec{"failovers", Surface::framework, q_failovers},
    QuerySpec{"digest", Surface::framework, q_digest},
    QuerySpec{"violations", Surface::framework, q_violations},
};

std::string token_tag(const std::string& token) { return token.empty() ? "" : sha256_hex(token).substr(0, 16); }

}  // namespace

ControlPlane::ControlPlane(Config config, bool bootstrap) : config_(std::move(config)), state_(make_state(config_)) {
  if (bootstrap)
    submit_system("user.create", Json{{"username", config_.admin_username}, {"role", "admin"}, {"password", config_.admin_password}});
}

Json ControlPlane::execute(const CommandSpec& spec, const Json& payload, const std::optional<Id>& actor,
                           const std::string& token, bool system, bool replay) {
  CommandContext ctx{state_, config_, actor, replay, {}, std::nullopt};
  std::optional<ControlState> backup;
  if (!spec.hot) {
    // Only ingest commands touch the meter and they are hot, so the copy
    // leaves the sample buffers out.
    Meter meter = std::move(state_.meter);
    state_.meter = Meter{};
    backup.emplace(state_);
    state_.meter = std::move(meter);
  }
  const auto rollback = [&] {
    if (!backup) return;
    backup->meter = std::move(state_.meter);
    state_ = std::move(*backup);
  };
  Json result;
  try {
    result = spec.handler(ctx, payload);
    for (const auto& fid : ctx.touched_farms)
      if (auto it = state_.farms.find(fid); it != state_.farms.end() && it->second.dr) ++it->second.delta_seq;
    ++state_.mutation_sequence;
    const Json rec = reconcile(state_, config_);
    (void)rec;
  } catch (const Json::exception& e) {
    rollback();
    raise(ErrorCode::MalformedCommand, std::string(spec.name) + ": " + e.what());
  } catch (...) {
    rollback();
    throw;
  }
  JournalRecord record{state_.mutation_sequence,
                       std::string(spec.name),
                       ctx.journal_payload ? *ctx.journal_payload : payload,
                       token_tag(token),
                       actor ? actor->value : std::string{},
                       system,
                       sha256_hex(result.dump())};
  if (writer_ && !replay) writer_->append(record);
  journal_.push_back(std::move(record));
  if (step_checks_)
    for (auto& v : check_invariants(state_)) step_violations_.emplace_back(state_.mutation_sequence, std::move(v));
  return result;
}

Json ControlPlane::submit(const std::string& name, const Json& payload, const std::string& token) {
  const CommandSpec* spec = find_command(name);
  if (!spec) raise(ErrorCode::MalformedCommand, "unknown command: " + name);
  if (!spec->needs_token) return execute(*spec, payload, std::nullopt, "", false, false);
  const AuthToken& t = state_.auth.resolve(token, state_.clock.now());
  const User& user = state_.auth.user(t.user_id);
  ResourceOwner owner;
  try {
    owner = spec->owner(state_, payload, user.id);
  } catch (const Json::exception& e) {
    raise(ErrorCode::MalformedCommand, std::string(name) + ": " + e.what());
  }
  if (check_access(t, user, state_.clock.now(), spec->surface, spec->action, owner) == Decision::deny)
    raise(ErrorCode::Forbidden, user.username + " may not run " + name);
  const Id actor = user.id;
  return execute(*spec, payload, actor, token, false, false);
}

Json ControlPlane::submit_system(const std::string& name, const Json& payload) {
  const CommandSpec* spec = find_command(name);
  if (!spec) raise(ErrorCode::MalformedCommand, "unknown command: " + name);
  return execute(*spec, payload, std::nullopt, "", true, false);
}

Json ControlPlane::login(const std::string& username, const std::string& password,
                         std::optional<std::set<Surface>> surfaces) {
  Json p{{"username", username}, {"password", password}};
  if (surfaces) p["surfaces"] = *surfaces;
  return submit("auth.login", p, "");
}

std::vector<std::string> ControlPlane::query_names() {
  std::vector<std::string> out;
  for (const auto& q : kQueries) out.emplace_back(q.name);
  return out;
}

Json ControlPlane::query(const std::string& what, const Json& params, const std::string& token) const {
  const QuerySpec* spec = nullptr;
  for (const auto& q : kQueries)
    if (q.name == what) spec = &q;
  if (!spec) raise(ErrorCode::MalformedCommand, "unknown query: " + what);
  const AuthToken& t = state_.auth.resolve(token, state_.clock.now());
  const User& user = state_.auth.user(t.user_id);
  if (check_access(t, user, state_.clock.now(), spec->surface, Action::view, {}) == Decision::deny)
    raise(ErrorCode::Forbidden, user.username + " may not view " + what);
  try {
    return spec->fn(QueryContext{state_, config_, user}, params.is_null() ? Json::object() : params);
  } catch (const Json::exception& e) {
    raise(ErrorCode::MalformedCommand, what + ": " + e.what());
  }
}

std::size_t ControlPlane::replay(std::span<const JournalRecord> records) {
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.sequence <= state_.mutation_sequence) continue;
    if (r.sequence != state_.mutation_sequence + 1)
      raise(ErrorCode::CorruptSnapshot, "journal gap before sequence " + std::to_string(r.sequence));
    const CommandSpec* spec = find_command(r.name);
    if (!spec) raise(ErrorCode::CorruptSnapshot, "journal names unknown command " + r.name);
    std::optional<Id> actor;
    if (!r.actor.empty()) actor = Id{r.actor};
    execute(*spec, r.payload, actor, "", r.system, true);
    journal_.back().token = r.token;
    if (journal_.back().result_digest != r.result_digest)
      raise(ErrorCode::CorruptSnapshot, "replayed result differs at sequence " + std::to_string(r.sequence));
    if (writer_) writer_->append(journal_.back());
    ++n;
  }
  return n;
}

ControlPlane ControlPlane::from_snapshot(Config config, const Json& state, std::span<const JournalRecord> suffix) {
  ControlPlane cp(std::move(config), false);
  cp.state_ = state_from_json(state);
  cp.replay(suffix);
  return cp;
}

void ControlPlane::open_data_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  data_dir_ = dir;
  checkpoint();
}

void ControlPlane::checkpoint() {
  if (data_dir_.empty()) raise(ErrorCode::WrongState, "no data directory attached");
  const auto dir = std::filesystem::path(data_dir_);
  write_snapshot_file((dir / kSnapshotFile).string(), state_to_json(state_));
  writer_.reset();
  write_file_atomic((dir / kJournalFile).string(), "");
  writer_ = std::make_unique<JournalWriter>((dir / kJournalFile).string());
}

ControlPlane ControlPlane::restore(Config config, const std::string& dir, RestoreReport* report) {
  const auto base = std::filesystem::path(dir);
  const Json snap = read_snapshot_file((base / kSnapshotFile).string());
  const JournalReadResult journal = read_journal_file((base / kJournalFile).string());
  ControlPlane cp(std::move(config), false);
  cp.state_ = state_from_json(snap);
  const std::size_t n = cp.replay(journal.records);
  if (report) *report = RestoreReport{n, journal.dropped_bytes, cp.digest()};
  cp.data_dir_ = dir;
  // Rewrite the journal so a torn tail never precedes new records.
  std::string bytes;
  for (const auto& r : journal.records)
    if (r.sequence > snap.at("mutation_sequence").get<std::uint64_t>()) bytes += encode_record(r);
  write_file_atomic((base / kJournalFile).string(), bytes);
  cp.writer_ = std::make_unique<JournalWriter>((base / kJournalFile).string());
  return cp;
}

}  // namespace deskcloud
