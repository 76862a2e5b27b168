#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deskcloud/control/config.hpp"
#include "deskcloud/control/control_plane.hpp"
#include "deskcloud/core/json_support.hpp"
#include "deskcloud/core/types.hpp"
#include "deskcloud/metering/load_profile.hpp"

namespace deskcloud {

inline constexpr int kScenarioSchemaVersion = 1;

struct ScenarioHostGroup {
  int count = 0;
  int vcpu = 0;
  std::int64_t memory_gib = 0;
  std::int64_t disk_gib = 0;
};

struct ScenarioSite {
  std::string name;
  std::string role = "primary";
  std::optional<std::string> peer;
  std::optional<std::string> replication_mode;
};

struct ScenarioPool {
  std::string name;
  std::string site;
  std::optional<double> overcommit_ratio;
  ScenarioHostGroup hosts;
};

struct ScenarioNetwork {
  std::string name;
  std::string site;
  std::string cidr;
};

struct ScenarioTemplate {
  std::string name;
  ResourceSpec spec;
  WorkloadClass workload_class = WorkloadClass::development;
  std::string os_label = "linux";
};

struct ScenarioInstanceGroup {
  std::string template_name;
  int count = 1;
  std::optional<WorkloadClass> workload_class;
  Json overrides;  // null when absent
  std::optional<std::int64_t> volume_gib;
  std::optional<std::string> anti_affinity_group;
};

struct ScenarioFarm {
  std::string name;
  std::string project;
  std::string pool;
  std::optional<std::string> secondary_pool;
  std::optional<std::string> network_cidr;
  Json quota;
  std::vector<ScenarioInstanceGroup> instances;
  int volume_count = 0;
  std::int64_t volume_gib = 0;
  int object_count = 0;
  std::int64_t object_size_bytes = 0;
};

struct ScenarioLoad {
  std::int64_t interval_ms = 0;  // 0 disables sampling
};

// One scripted event. Targets name scenario objects: hosts are
// "<pool>-h<index>", storage nodes "node-<index>".
struct ScenarioEvent {
  std::int64_t at_ms = 0;
  std::string type;
  Json args;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::uint64_t seed = 1;
  std::map<std::string, std::string> config;
  std::vector<ScenarioSite> sites;
  std::vector<ScenarioPool> pools;
  std::vector<ScenarioNetwork> networks;
  int storage_node_count = 0;
  std::int64_t storage_node_capacity_gib = 0;
  std::vector<std::string> projects;
  std::vector<ScenarioTemplate> templates;
  std::vector<ScenarioFarm> farms;
  ScenarioLoad load;
  std::int64_t duration_ms = 0;
  std::vector<ScenarioEvent> events;
};

// Validates structure, references and event ordering; throws
// ScenarioParseError naming the offending field.
Scenario parse_scenario(const Json& doc);
Scenario load_scenario_file(const std::string& path);

struct TimedViolation {
  std::int64_t at_ms = 0;
  std::string boundary;
  Violation violation;
};

struct ScenarioReport {
  std::uint64_t seed = 0;
  std::string digest;
  std::vector<TimedViolation> violations;
  std::string metrics_csv;
  Json failovers = Json::array();
  Json event_log = Json::array();
  Json summary = Json::object();
  double elapsed_seconds = 0.0;
};

Json to_json(const ScenarioReport& r);

class ScenarioRunner {
 public:
  explicit ScenarioRunner(Scenario scenario);

  ScenarioReport run();
  Config config() const;
  // Control plane of the last run().
  ControlPlane& plane() { return *plane_; }
  const std::map<std::string, Id>& names() const { return names_; }

 private:
  void setup();
  Json apply(const ScenarioEvent& e);
  void sample_load();
  void check(const std::string& boundary);
  Id resolve(const std::string& kind, const std::string& name) const;
  Json submit(const std::string& command, const Json& payload);

  Scenario scenario_;
  std::unique_ptr<ControlPlane> plane_;
  std::map<std::string, Id> names_;  // "<kind>:<name>" -> id
  std::map<Id, std::unique_ptr<LoadProfile>> profiles_;
  ScenarioReport report_;
  std::uint64_t block_counter_ = 0;
};

ScenarioReport run_scenario(const Scenario& scenario);

}  // namespace deskcloud
