#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "deskcloud/core/clock.hpp"
#include "deskcloud/core/enum_names.hpp"
#include "deskcloud/core/id.hpp"
#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

inline constexpr std::int64_t kGiB = std::int64_t{1} << 30;
inline constexpr std::int64_t kTiBInGiB = 1024;

// Byte count for a (possibly fractional) GiB quantity, rounded to the
// nearest byte.
std::int64_t gib_to_bytes(double gib);
double bytes_to_gib(std::int64_t bytes);

// Virtual hardware for one instance. Each vcpu is nominally a 2 GHz core.
struct ResourceSpec {
  int vcpu = 1;
  std::int64_t memory_gib = 1;
  std::int64_t disk_gib = 1;
  int network_count = 1;

  bool operator==(const ResourceSpec&) const = default;
};

// Throws InvalidArgument when any dimension is below one.
void validate(const ResourceSpec& spec);

enum class LifecycleState { Requested, Attributed, Running, Migrating, Stopped, Failed, Destroyed };
enum class LifecycleEvent { attribute, start, migrate_begin, migrate_end, stop, fail, destroy };
enum class WorkloadClass { service, development };

template <>
struct EnumNames<LifecycleState> {
  static constexpr std::array<std::pair<LifecycleState, std::string_view>, 7> names{{
      {LifecycleState::Requested, "Requested"},
      {LifecycleState::Attributed, "Attributed"},
      {LifecycleState::Running, "Running"},
      {LifecycleState::Migrating, "Migrating"},
      {LifecycleState::Stopped, "Stopped"},
      {LifecycleState::Failed, "Failed"},
      {LifecycleState::Destroyed, "Destroyed"},
  }};
};

template <>
struct EnumNames<LifecycleEvent> {
  static constexpr std::array<std::pair<LifecycleEvent, std::string_view>, 7> names{{
      {LifecycleEvent::attribute, "attribute"},
      {LifecycleEvent::start, "start"},
      {LifecycleEvent::migrate_begin, "migrate_begin"},
      {LifecycleEvent::migrate_end, "migrate_end"},
      {LifecycleEvent::stop, "stop"},
      {LifecycleEvent::fail, "fail"},
      {LifecycleEvent::destroy, "destroy"},
  }};
};

template <>
struct EnumNames<WorkloadClass> {
  static constexpr std::array<std::pair<WorkloadClass, std::string_view>, 2> names{{
      {WorkloadClass::service, "service"},
      {WorkloadClass::development, "development"},
  }};
};

struct Instance {
  Id id;
  Id template_id;
  Id farm_id;
  std::optional<Id> host_id;
  ResourceSpec spec;
  LifecycleState state = LifecycleState::Requested;
  WorkloadClass workload_class = WorkloadClass::development;
  SimTime created_at{};
  Id created_by;
  std::optional<Id> anti_affinity_group;
  bool ever_started = false;
  bool monitoring = false;
  bool backup = false;
};

bool holds_host(LifecycleState s) noexcept;

void to_json(Json& j, const ResourceSpec& s);
void from_json(const Json& j, ResourceSpec& s);
void to_json(Json& j, const Instance& i);
void from_json(const Json& j, Instance& i);

}  // namespace deskcloud
