#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "deskcloud/auth/rbac.hpp"
#include "deskcloud/control/config.hpp"
#include "deskcloud/control/state.hpp"

namespace deskcloud {

struct CommandContext {
  ControlState& state;
  const Config& config;
  std::optional<Id> actor;  // unset for system commands
  bool replay = false;
  std::set<Id> touched_farms;
  // Replaces the journaled payload (credentials are never journaled).
  std::optional<Json> journal_payload;

  SimTime now() const { return state.clock.now(); }
  void touch(const Id& farm_id) { touched_farms.insert(farm_id); }
};

using OwnerFn = ResourceOwner (*)(const ControlState&, const Json& payload, const Id& actor);
using HandlerFn = Json (*)(CommandContext&, const Json& payload);

struct CommandSpec {
  std::string_view name;
  Surface surface;
  Action action;
  OwnerFn owner;
  HandlerFn handler;
  // Hot commands validate before mutating and skip the rollback copy.
  bool hot = false;
  bool needs_token = true;
};

std::span<const CommandSpec> command_table();
const CommandSpec* find_command(std::string_view name);

// Fails instances stranded on down hosts, repairs objects and ships
// replication. Runs after every command; liveness sweeps and automatic
// failover happen only on heartbeat boundaries inside sim.tick.
Json reconcile(ControlState& state, const Config& config);

// Promotes `site_id` and moves every replicating farm active on its peer.
Json fail_over_site(ControlState& state, const Config& config, const Id& site_id, FailoverTrigger trigger);

// Deterministic salt so journal replay never draws from the id stream.
std::string credential_salt(std::uint64_t seed, const std::string& username);

Json instance_json(const ControlState& state, const Instance& instance);

}  // namespace deskcloud
