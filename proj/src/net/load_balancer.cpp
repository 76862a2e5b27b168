#include "deskcloud/net/load_balancer.hpp"

#include <algorithm>

namespace deskcloud {

Id lb_pick(const LbRule& rule, std::uint64_t request_ordinal, std::span<const Id> live) {
  std::vector<Id> candidates;
  for (const auto& b : rule.backend_instance_ids)
    if (std::find(live.begin(), live.end(), b) != live.end()) candidates.push_back(b);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) raise(ErrorCode::NoLiveBackend, "no live backend for rule " + rule.id.value);

  if (rule.algorithm == LbAlgorithm::round_robin) return candidates[request_ordinal % candidates.size()];

  const Id* best = nullptr;
  std::uint64_t best_count = 0;
  for (const auto& c : candidates) {
    auto it = rule.pick_counts.find(c);
    const std::uint64_t n = it == rule.pick_counts.end() ? 0 : it->second;
    if (!best || n < best_count) {
      best = &c;
      best_count = n;
    }
  }
  return *best;
}

void to_json(Json& j, const LbRule& r) {
  Json counts = Json::object();
  for (const auto& [id, n] : r.pick_counts) counts[id.value] = n;
  j = Json{{"id", r.id},
           {"farm_id", r.farm_id},
           {"vip", r.vip},
           {"port", r.port},
           {"backend_instance_ids", r.backend_instance_ids},
           {"algorithm", r.algorithm},
           {"pick_counts", std::move(counts)}};
}

void from_json(const Json& j, LbRule& r) {
  r.id = field_or<Id>(j, "id", Id{});
  r.farm_id = field_or<Id>(j, "farm_id", Id{});
  j.at("vip").get_to(r.vip);
  j.at("port").get_to(r.port);
  j.at("backend_instance_ids").get_to(r.backend_instance_ids);
  r.algorithm = field_or(j, "algorithm", LbAlgorithm::round_robin);
  r.pick_counts.clear();
  if (auto it = j.find("pick_counts"); it != j.end())
    for (const auto& [k, v] : it->items()) r.pick_counts[Id{k}] = v.get<std::uint64_t>();
}

}  // namespace deskcloud
