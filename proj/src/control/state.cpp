#include "deskcloud/control/state.hpp"

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"

namespace deskcloud {

ControlState make_state(const Config& config) {
  ControlState s;
  s.ids = IdGenerator(config.seed);
  s.objects = ObjectStoreCluster(Id{"objects"}, ObjectStorePolicy{config.object_replication_factor,
                                                                   config.object_write_quorum,
                                                                   config.object_read_quorum, 64});
  return s;
}

namespace {

template <class V>
Json map_values(const std::map<Id, V>& m) {
  Json out = Json::array();
  for (const auto& [_, v] : m) out.push_back(v);
  return out;
}

template <class V>
std::map<Id, V> values_map(const Json& j) {
  std::map<Id, V> out;
  for (const auto& e : j) {
    auto v = e.get<V>();
    Id id = v.id;
    out.emplace(std::move(id), std::move(v));
  }
  return out;
}

}  // namespace

Json state_to_json(const ControlState& s) {
  const auto ids = s.ids.state();
  Json creators = Json::object();
  for (const auto& [res, user] : s.creators) creators[res.value] = user;
  return Json{{"clock_ms", to_ms(s.clock.now())},
              {"ids",
               {{"seed", ids.seed}, {"counter", ids.counter}, {"last_ms", ids.last_ms}, {"last_hi", ids.last_hi}, {"last_lo", ids.last_lo}}},
              {"mutation_sequence", s.mutation_sequence},
              {"auth", s.auth},
              {"sites", map_values(s.sites)},
              {"pools", s.pools},
              {"templates", s.templates},
              {"farms", map_values(s.farms)},
              {"instances", map_values(s.instances)},
              {"net", s.net},
              {"objects", s.objects},
              {"blocks", s.blocks},
              {"meter", s.meter},
              {"creators", std::move(creators)},
              {"failovers", s.failovers}};
}

ControlState state_from_json(const Json& j) {
  ControlState s;
  s.clock.set(sim_time_ms(j.at("clock_ms").get<std::int64_t>()));
  const auto& ids = j.at("ids");
  IdGenerator::State st{ids.at("seed").get<std::uint64_t>(), ids.at("counter").get<std::uint64_t>(),
                        ids.at("last_ms").get<std::int64_t>(), ids.at("last_hi").get<std::uint64_t>(),
                        ids.at("last_lo").get<std::uint64_t>()};
  s.ids.restore(st);
  j.at("mutation_sequence").get_to(s.mutation_sequence);
  j.at("auth").get_to(s.auth);
  s.sites = values_map<Site>(j.at("sites"));
  j.at("pools").get_to(s.pools);
  j.at("templates").get_to(s.templates);
  s.farms = values_map<Farm>(j.at("farms"));
  s.instances = values_map<Instance>(j.at("instances"));
  j.at("net").get_to(s.net);
  j.at("objects").get_to(s.objects);
  j.at("blocks").get_to(s.blocks);
  j.at("meter").get_to(s.meter);
  for (const auto& [res, user] : j.at("creators").items()) s.creators[Id{res}] = user.get<Id>();
  s.failovers = j.at("failovers").get<std::vector<Json>>();
  return s;
}

std::string state_digest(const ControlState& s) { return sha256_hex(state_to_json(s).dump()); }

Json farm_view(const ControlState& s, const Id& farm_id) {
  const Farm& f = farm_of(s, farm_id);
  Json farm = f;
  farm.erase("standby_state");
  farm.erase("delta_seq");
  farm.erase("replicated_seq");
  farm.erase("degraded");
  Json instances = Json::array();
  Json assignments = Json::array();
  for (const auto& [id, inst] : s.instances) {
    if (inst.farm_id != farm_id) continue;
    instances.push_back(inst);
    for (const auto& a : s.net.assignments_of(id)) assignments.push_back(a);
  }
  Json volumes = Json::array();
  for (const auto& vid : s.blocks.volumes_of_farm(farm_id)) {
    const BlockVolume& v = s.blocks.get(vid);
    volumes.push_back(Json{{"id", v.id},
                           {"size_gib", v.size_gib},
                           {"attached_instance", v.attached_instance},
                           {"journal_length", v.journal.size()},
                           {"lost", v.lost}});
  }
  return Json{{"farm", std::move(farm)}, {"instances", std::move(instances)}, {"assignments", std::move(assignments)}, {"volumes", std::move(volumes)}};
}

const Farm& farm_of(const ControlState& s, const Id& farm_id) {
  auto it = s.farms.find(farm_id);
  if (it == s.farms.end()) raise(ErrorCode::NotFound, "unknown farm: " + farm_id.value);
  return it->second;
}

const Instance& instance_of(const ControlState& s, const Id& instance_id) {
  auto it = s.instances.find(instance_id);
  if (it == s.instances.end()) raise(ErrorCode::NotFound, "unknown instance: " + instance_id.value);
  return it->second;
}

std::size_t live_instance_count(const ControlState& s, const Id& farm_id) {
  std::size_t n = 0;
  for (const auto& [_, i] : s.instances)
    if (i.farm_id == farm_id && i.state != LifecycleState::Destroyed) ++n;
  return n;
}

std::int64_t farm_block_usage_gib(const ControlState& s, const Id& farm_id) {
  return s.blocks.farm_usage_gib(farm_id) + farm_of(s, farm_id).share.used_gib;
}

}  // namespace deskcloud
