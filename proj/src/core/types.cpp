#include "deskcloud/core/types.hpp"

#include <cmath>

namespace deskcloud {

std::int64_t gib_to_bytes(double gib) {
  if (!std::isfinite(gib) || gib < 0) raise(ErrorCode::InvalidArgument, "size must be a non-negative number");
  return static_cast<std::int64_t>(std::llround(gib * static_cast<double>(kGiB)));
}

double bytes_to_gib(std::int64_t bytes) { return static_cast<double>(bytes) / static_cast<double>(kGiB); }

void validate(const ResourceSpec& spec) {
  if (spec.vcpu < 1 || spec.memory_gib < 1 || spec.disk_gib < 1 || spec.network_count < 1)
    raise(ErrorCode::InvalidArgument, "resource spec needs at least 1 vcpu, 1 GiB memory, 1 GiB disk and 1 network");
}

bool holds_host(LifecycleState s) noexcept {
  return s == LifecycleState::Running || s == LifecycleState::Migrating;
}

void to_json(Json& j, const ResourceSpec& s) {
  j = Json{{"vcpu", s.vcpu}, {"memory_gib", s.memory_gib}, {"disk_gib", s.disk_gib}, {"network_count", s.network_count}};
}

void from_json(const Json& j, ResourceSpec& s) {
  s.vcpu = j.at("vcpu").get<int>();
  s.memory_gib = j.at("memory_gib").get<std::int64_t>();
  s.disk_gib = j.at("disk_gib").get<std::int64_t>();
  s.network_count = j.at("network_count").get<int>();
}

void to_json(Json& j, const Instance& i) {
  j = Json{{"id", i.id},
           {"template_id", i.template_id},
           {"farm_id", i.farm_id},
           {"host_id", i.host_id},
           {"spec", i.spec},
           {"state", i.state},
           {"workload_class", i.workload_class},
           {"created_at", i.created_at},
           {"created_by", i.created_by},
           {"anti_affinity_group", i.anti_affinity_group},
           {"ever_started", i.ever_started},
           {"monitoring", i.monitoring},
           {"backup", i.backup}};
}

void from_json(const Json& j, Instance& i) {
  j.at("id").get_to(i.id);
  j.at("template_id").get_to(i.template_id);
  j.at("farm_id").get_to(i.farm_id);
  j.at("host_id").get_to(i.host_id);
  j.at("spec").get_to(i.spec);
  j.at("state").get_to(i.state);
  j.at("workload_class").get_to(i.workload_class);
  j.at("created_at").get_to(i.created_at);
  j.at("created_by").get_to(i.created_by);
  j.at("anti_affinity_group").get_to(i.anti_affinity_group);
  j.at("ever_started").get_to(i.ever_started);
  j.at("monitoring").get_to(i.monitoring);
  j.at("backup").get_to(i.backup);
}

}  // namespace deskcloud
