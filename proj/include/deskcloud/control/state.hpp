#pragma once

#include <map>
#include <string>
#include <vector>

#include "deskcloud/auth/rbac.hpp"
#include "deskcloud/control/config.hpp"
#include "deskcloud/core/clock.hpp"
#include "deskcloud/core/id.hpp"
#include "deskcloud/core/types.hpp"
#include "deskcloud/farm/farm.hpp"
#include "deskcloud/metering/metering.hpp"
#include "deskcloud/net/net_manager.hpp"
#include "deskcloud/pool/pool.hpp"
#include "deskcloud/storage/block_store.hpp"
#include "deskcloud/storage/object_store.hpp"
#include "deskcloud/templates/template_store.hpp"

namespace deskcloud {

// Everything the control plane owns. The journal lives beside it, not in it.
struct ControlState {
  SimClock clock;
  IdGenerator ids;
  std::uint64_t mutation_sequence = 0;
  AuthRegistry auth;
  std::map<Id, Site> sites;
  PoolRegistry pools;
  TemplateStore templates;
  std::map<Id, Farm> farms;
  std::map<Id, Instance> instances;
  NetManager net;
  ObjectStoreCluster objects;
  BlockStore blocks;
  Meter meter;
  // Creator of resources whose own records carry none (rules, volumes).
  std::map<Id, Id> creators;
  std::vector<Json> failovers;
};

ControlState make_state(const Config& config);

Json state_to_json(const ControlState& s);
ControlState state_from_json(const Json& j);
std::string state_digest(const ControlState& s);

// Replicated view of one farm: the farm record, its instances, network
// assignments and volume metadata (journal bodies excluded).
Json farm_view(const ControlState& s, const Id& farm_id);

const Farm& farm_of(const ControlState& s, const Id& farm_id);
const Instance& instance_of(const ControlState& s, const Id& instance_id);
std::size_t live_instance_count(const ControlState& s, const Id& farm_id);
std::int64_t farm_block_usage_gib(const ControlState& s, const Id& farm_id);

}  // namespace deskcloud
