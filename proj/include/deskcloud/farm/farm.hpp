#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "deskcloud/core/id.hpp"
#include "deskcloud/core/json_support.hpp"
#include "deskcloud/storage/block_store.hpp"

namespace deskcloud {

enum class SiteRole { primary, secondary };
enum class SiteStatus { active, standby, failed };
enum class FailoverTrigger { automatic, manual };

template <>
struct EnumNames<SiteRole> {
  static constexpr std::array<std::pair<SiteRole, std::string_view>, 2> names{{{SiteRole::primary, "primary"}, {SiteRole::secondary, "secondary"}}};
};
template <>
struct EnumNames<SiteStatus> {
  static constexpr std::array<std::pair<SiteStatus, std::string_view>, 3> names{{
      {SiteStatus::active, "active"}, {SiteStatus::standby, "standby"}, {SiteStatus::failed, "failed"}}};
};
template <>
struct EnumNames<FailoverTrigger> {
  static constexpr std::array<std::pair<FailoverTrigger, std::string_view>, 2> names{{
      {FailoverTrigger::automatic, "auto"}, {FailoverTrigger::manual, "manual"}}};
};

struct Site {
  Id id;
  std::string name;
  SiteRole role = SiteRole::primary;
  SiteStatus status = SiteStatus::active;
  ReplicationMode replication_mode = ReplicationMode::sync;
  std::optional<Id> peer_site;
  // Simulator truth; the control plane sees an unreachable site only as
  // missing heartbeats and failed replication.
  bool reachable = true;
};

struct FarmQuota {
  int max_hosts = 0;
  int max_instances = 0;
  std::int64_t object_quota_gib = 0;
  std::int64_t block_quota_gib = 0;
};

struct DirectoryService {
  bool enabled = true;
  std::string type_label = "ldap";
};

struct RemoteAccess {
  bool agent = false;
  bool vdi = false;
  bool desktop = false;
  std::map<std::string, std::string> endpoints;
};

struct DrPair {
  Id secondary_site;
  Id secondary_pool;
  std::vector<Id> secondary_allotment;
};

struct Farm {
  Id id;
  std::string name;
  Id project_id;
  // Where the farm currently runs.
  Id site_id;
  Id pool_id;
  Id primary_site;
  Id primary_pool;
  FarmQuota quota;
  std::set<int> vlan_ids;
  FarmShare share;
  DirectoryService directory_service;
  std::map<Id, RemoteAccess> remote_access;
  std::vector<Id> allotted_hosts;
  std::optional<DrPair> dr;
  std::uint64_t delta_seq = 0;
  std::uint64_t replicated_seq = 0;
  Json standby_state;
  bool degraded = false;

  std::uint64_t replication_lag() const { return delta_seq - replicated_seq; }
  // Hosts the farm may place on at its current site.
  const std::vector<Id>& active_allotment() const;
};

struct ReplicationReport {
  Id farm_id;
  std::uint64_t from_seq = 0;
  std::uint64_t to_seq = 0;
  std::uint64_t lag = 0;
  bool shipped = false;
};

// Lowest VLAN ids in [100, 4094] not yet used on `site`, skipping `taken`.
std::vector<int> allocate_vlans(const std::map<Id, Farm>& farms, const Id& site, std::size_t count,
                                const std::set<int>& taken);

RemoteAccess make_remote_access(const Id& instance_id, bool agent, bool vdi, bool desktop);

void validate(const FarmQuota& q);

void to_json(Json& j, const Site& s);
void from_json(const Json& j, Site& s);
void to_json(Json& j, const FarmQuota& q);
void from_json(const Json& j, FarmQuota& q);
void to_json(Json& j, const RemoteAccess& r);
void from_json(const Json& j, RemoteAccess& r);
void to_json(Json& j, const Farm& f);
void from_json(const Json& j, Farm& f);
void to_json(Json& j, const ReplicationReport& r);

}  // namespace deskcloud
