#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "deskcloud/core/id.hpp"
#include "deskcloud/net/ipv4.hpp"

namespace deskcloud {

enum class LbAlgorithm { round_robin, least_assignments };

template <>
struct EnumNames<LbAlgorithm> {
  static constexpr std::array<std::pair<LbAlgorithm, std::string_view>, 2> names{{
      {LbAlgorithm::round_robin, "round_robin"}, {LbAlgorithm::least_assignments, "least_assignments"}}};
};

struct LbRule {
  Id id;
  Id farm_id;
  Ipv4 vip;
  int port = 80;
  std::vector<Id> backend_instance_ids;
  LbAlgorithm algorithm = LbAlgorithm::round_robin;
  std::map<Id, std::uint64_t> pick_counts;
};

// Chooses a backend among the rule's backends that appear in `live`.
// round_robin indexes the live backends sorted by Id with the ordinal;
// least_assignments takes the fewest picks so far, ties to the lowest Id.
Id lb_pick(const LbRule& rule, std::uint64_t request_ordinal, std::span<const Id> live);

void to_json(Json& j, const LbRule& r);
void from_json(const Json& j, LbRule& r);

}  // namespace deskcloud
