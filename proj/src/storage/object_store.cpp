#include "deskcloud/storage/object_store.hpp"

#include <algorithm>

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"

namespace deskcloud {

std::uint64_t ring_position(std::string_view token) { return stable_hash64(token); }

std::string vnode_token(const Id& node, int index) { return node.value + "#" + std::to_string(index); }

ObjectStoreCluster::ObjectStoreCluster(Id id, ObjectStorePolicy policy) : id_(std::move(id)), policy_(policy) {
  if (policy_.replication_factor < 1 || policy_.write_quorum < 1 || policy_.read_quorum < 1 ||
      policy_.write_quorum > policy_.replication_factor || policy_.read_quorum > policy_.replication_factor ||
      policy_.vnodes_per_node < 1)
    raise(ErrorCode::InvalidArgument, "object store quorums must satisfy 1 <= quorum <= replication factor");
}

void ObjectStoreCluster::add_node(StorageNode node) {
  if (nodes_.contains(node.id)) raise(ErrorCode::Conflict, "storage node exists: " + node.id.value);
  if (node.capacity_bytes <= 0) raise(ErrorCode::InvalidArgument, "storage node capacity must be positive");
  node.used_bytes = 0;
  nodes_.emplace(node.id, std::move(node));
  rebuild_ring();
  dirty_ = true;
}

void ObjectStoreCluster::rebuild_ring() {
  ring_.clear();
  for (const auto& [id, _] : nodes_)
    for (int i = 0; i < policy_.vnodes_per_node; ++i) ring_.emplace_back(ring_position(vnode_token(id, i)), id);
  std::sort(ring_.begin(), ring_.end());
}

StorageNode& ObjectStoreCluster::mutable_node(const Id& node_id) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) raise(ErrorCode::NotFound, "unknown storage node: " + node_id.value);
  return it->second;
}

const StorageNode& ObjectStoreCluster::node(const Id& node_id) const {
  return const_cast<ObjectStoreCluster*>(this)->mutable_node(node_id);
}

void ObjectStoreCluster::set_node_live(const Id& node_id, bool live) {
  StorageNode& n = mutable_node(node_id);
  if (n.live != live) dirty_ = true;
  n.live = live;
}

std::size_t ObjectStoreCluster::live_node_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& kv) { return kv.second.live; }));
}

std::vector<Id> ObjectStoreCluster::ring_walk(std::string_view key) const {
  std::vector<Id> out;
  if (ring_.empty()) return out;
  const std::uint64_t pos = ring_position(key);
  auto start = std::lower_bound(ring_.begin(), ring_.end(), pos, [](const auto& e, std::uint64_t p) { return e.first < p; });
  const std::size_t first = static_cast<std::size_t>(start - ring_.begin());
  for (std::size_t k = 0; k < ring_.size() && out.size() < nodes_.size(); ++k) {
    const Id& n = ring_[(first + k) % ring_.size()].second;
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  }
  return out;
}

const StoredObject* ObjectStoreCluster::find(const std::string& key) const {
  auto it = objects_.find(key);
  return it == objects_.end() ? nullptr : &it->second;
}

std::size_t ObjectStoreCluster::live_replicas(const StoredObject& obj) const {
  return static_cast<std::size_t>(std::count_if(obj.replica_nodes.begin(), obj.replica_nodes.end(),
                                                [&](const Id& n) { return nodes_.at(n).live; }));
}

std::int64_t ObjectStoreCluster::farm_usage_bytes(const Id& farm_id) const {
  auto it = farm_usage_.find(farm_id);
  return it == farm_usage_.end() ? 0 : it->second;
}

const StoredObject& ObjectStoreCluster::put(const std::string& key, const Id& farm_id, const Id& creator,
                                            std::int64_t size_bytes, const std::string& content_hash,
                                            std::int64_t quota_bytes) {
  if (key.empty()) raise(ErrorCode::InvalidArgument, "object key must not be empty");
  if (size_bytes < 0) raise(ErrorCode::InvalidArgument, "object size must be >= 0");
  const StoredObject* existing = find(key);
  if (existing && existing->farm_id != farm_id) raise(ErrorCode::Conflict, "key belongs to another farm: " + key);
  const std::int64_t old_size = existing ? existing->size_bytes : 0;
  if (farm_usage_bytes(farm_id) - old_size + size_bytes > quota_bytes)
    raise(ErrorCode::QuotaExceeded, "farm object quota exceeded by put of " + key);

  std::vector<Id> targets;
  for (const auto& n : ring_walk(key)) {
    if (static_cast<int>(targets.size()) == policy_.replication_factor) break;
    const StorageNode& node = nodes_.at(n);
    const bool holds_old = existing && std::find(existing->replica_nodes.begin(), existing->replica_nodes.end(), n) !=
                                           existing->replica_nodes.end();
    const std::int64_t free = node.capacity_bytes - node.used_bytes + (holds_old ? old_size : 0);
    if (node.live && free >= size_bytes) targets.push_back(n);
  }
  if (static_cast<int>(targets.size()) < policy_.write_quorum)
    raise(ErrorCode::QuorumUnavailable, "only " + std::to_string(targets.size()) + " live replica targets for " + key);

  if (existing) {
    for (const auto& n : existing->replica_nodes) nodes_.at(n).used_bytes -= old_size;
    farm_usage_[farm_id] -= old_size;
  }
  for (const auto& n : targets) nodes_.at(n).used_bytes += size_bytes;
  farm_usage_[farm_id] += size_bytes;
  if (static_cast<int>(targets.size()) < policy_.replication_factor) dirty_ = true;
  StoredObject& obj = objects_[key];
  obj = StoredObject{key, farm_id, existing ? existing->creator : creator, size_bytes, content_hash, targets};
  return obj;
}

std::string ObjectStoreCluster::get(const std::string& key) const {
  const StoredObject* obj = find(key);
  if (!obj) raise(ErrorCode::NotFound, "no such object: " + key);
  if (static_cast<int>(live_replicas(*obj)) < policy_.read_quorum)
    raise(ErrorCode::QuorumUnavailable, "read quorum unavailable for " + key);
  return obj->content_hash;
}

void ObjectStoreCluster::remove(const std::string& key) {
  auto it = objects_.find(key);
  if (it == objects_.end()) raise(ErrorCode::NotFound, "no such object: " + key);
  for (const auto& n : it->second.replica_nodes) nodes_.at(n).used_bytes -= it->second.size_bytes;
  farm_usage_[it->second.farm_id] -= it->second.size_bytes;
  if (farm_usage_[it->second.farm_id] == 0) farm_usage_.erase(it->second.farm_id);
  objects_.erase(it);
}

RepairReport ObjectStoreCluster::repair() {
  RepairReport report;
  if (!dirty_) return report;
  for (auto& [key, obj] : objects_) {
    std::vector<Id> kept;
    for (const auto& n : obj.replica_nodes) {
      if (nodes_.at(n).live)
        kept.push_back(n);
      else
        nodes_.at(n).used_bytes -= obj.size_bytes;
    }
    const bool dropped = kept.size() != obj.replica_nodes.size();
    std::size_t added = 0;
    if (static_cast<int>(kept.size()) < policy_.replication_factor) {
      for (const auto& n : ring_walk(key)) {
        if (static_cast<int>(kept.size()) == policy_.replication_factor) break;
        StorageNode& node = nodes_.at(n);
        if (!node.live || std::find(kept.begin(), kept.end(), n) != kept.end()) continue;
        if (node.capacity_bytes - node.used_bytes < obj.size_bytes) continue;
        node.used_bytes += obj.size_bytes;
        kept.push_back(n);
        ++added;
      }
    }
    if (dropped || added) {
      obj.replica_nodes = std::move(kept);
      if (added) {
        ++report.repaired_keys;
        report.added_replicas += added;
      }
    }
    if (static_cast<int>(obj.replica_nodes.size()) < policy_.replication_factor) report.under_replicated.push_back(key);
  }
  // Keys that stay short are re-examined once membership changes again.
  dirty_ = false;
  return report;
}

void to_json(Json& j, const StorageNode& n) {
  j = Json{{"id", n.id}, {"name", n.name}, {"live", n.live}, {"used_bytes", n.used_bytes}, {"capacity_bytes", n.capacity_bytes}};
}

void from_json(const Json& j, StorageNode& n) {
  j.at("id").get_to(n.id);
  j.at("name").get_to(n.name);
  j.at("live").get_to(n.live);
  j.at("used_bytes").get_to(n.used_bytes);
  j.at("capacity_bytes").get_to(n.capacity_bytes);
}

void to_json(Json& j, const StoredObject& o) {
  j = Json{{"key", o.key},           {"farm_id", o.farm_id},           {"creator", o.creator},
           {"size_bytes", o.size_bytes}, {"content_hash", o.content_hash}, {"replica_nodes", o.replica_nodes}};
}

void from_json(const Json& j, StoredObject& o) {
  j.at("key").get_to(o.key);
  j.at("farm_id").get_to(o.farm_id);
  j.at("creator").get_to(o.creator);
  j.at("size_bytes").get_to(o.size_bytes);
  j.at("content_hash").get_to(o.content_hash);
  j.at("replica_nodes").get_to(o.replica_nodes);
}

void to_json(Json& j, const RepairReport& r) {
  j = Json{{"repaired_keys", r.repaired_keys}, {"added_replicas", r.added_replicas}, {"under_replicated", r.under_replicated}};
}

void to_json(Json& j, const ObjectStoreCluster& c) {
  Json nodes = Json::array();
  for (const auto& [_, n] : c.nodes_) nodes.push_back(n);
  Json objects = Json::array();
  for (const auto& [_, o] : c.objects_) objects.push_back(o);
  Json usage = Json::object();
  for (const auto& [farm, bytes] : c.farm_usage_) usage[farm.value] = bytes;
  j = Json{{"id", c.id_},
           {"policy",
            {{"replication_factor", c.policy_.replication_factor},
             {"write_quorum", c.policy_.write_quorum},
             {"read_quorum", c.policy_.read_quorum},
             {"vnodes_per_node", c.policy_.vnodes_per_node}}},
           {"nodes", std::move(nodes)},
           {"objects", std::move(objects)},
           {"farm_usage", std::move(usage)},
           {"dirty", c.dirty_}};
}

void from_json(const Json& j, ObjectStoreCluster& c) {
  const auto& p = j.at("policy");
  ObjectStorePolicy policy{p.at("replication_factor").get<int>(), p.at("write_quorum").get<int>(),
                           p.at("read_quorum").get<int>(), p.at("vnodes_per_node").get<int>()};
  c = ObjectStoreCluster(j.at("id").get<Id>(), policy);
  for (const auto& n : j.at("nodes")) {
    auto node = n.get<StorageNode>();
    c.nodes_.emplace(node.id, std::move(node));
  }
  for (const auto& o : j.at("objects")) {
    auto obj = o.get<StoredObject>();
    c.objects_.emplace(obj.key, std::move(obj));
  }
  for (const auto& [farm, bytes] : j.at("farm_usage").items()) c.farm_usage_[Id{farm}] = bytes.get<std::int64_t>();
  c.dirty_ = j.at("dirty").get<bool>();
  c.rebuild_ring();
}

}  // namespace deskcloud
