#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deskcloud/core/id.hpp"
#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

struct StorageNode {
  Id id;
  std::string name;
  bool live = true;
  std::int64_t used_bytes = 0;
  std::int64_t capacity_bytes = 0;
};

struct StoredObject {
  std::string key;
  Id farm_id;
  Id creator;
  std::int64_t size_bytes = 0;
  std::string content_hash;
  std::vector<Id> replica_nodes;
};

struct ObjectStorePolicy {
  int replication_factor = 3;
  int write_quorum = 2;
  int read_quorum = 1;
  int vnodes_per_node = 64;
};

struct RepairReport {
  std::size_t repaired_keys = 0;
  std::size_t added_replicas = 0;
  std::vector<std::string> under_replicated;
};

// Ring position of a key or virtual node token.
std::uint64_t ring_position(std::string_view token);
std::string vnode_token(const Id& node, int index);

// Swift-style replicated store. Payloads are represented only by their size
// and content hash.
class ObjectStoreCluster {
 public:
  ObjectStoreCluster() = default;
  ObjectStoreCluster(Id id, ObjectStorePolicy policy);

  const Id& id() const { return id_; }
  const ObjectStorePolicy& policy() const { return policy_; }

  void add_node(StorageNode node);
  void set_node_live(const Id& node_id, bool live);
  const StorageNode& node(const Id& node_id) const;
  const std::map<Id, StorageNode>& nodes() const { return nodes_; }
  std::size_t live_node_count() const;

  // Distinct physical nodes in clockwise order starting at hash(key).
  std::vector<Id> ring_walk(std::string_view key) const;

  // Stores replicas on the first replication_factor live nodes with room on
  // the ring walk. QuotaExceeded when the farm's usage would pass
  // quota_bytes; QuorumUnavailable when fewer than write_quorum targets exist.
  const StoredObject& put(const std::string& key, const Id& farm_id, const Id& creator, std::int64_t size_bytes,
                          const std::string& content_hash, std::int64_t quota_bytes);
  // Content hash of a key readable from at least read_quorum live replicas.
  std::string get(const std::string& key) const;
  void remove(const std::string& key);

  const StoredObject* find(const std::string& key) const;
  const std::map<std::string, StoredObject>& objects() const { return objects_; }
  std::size_t live_replicas(const StoredObject& obj) const;
  std::int64_t farm_usage_bytes(const Id& farm_id) const;

  // Drops replicas on dead nodes and walks the ring to restore the factor.
  RepairReport repair();
  bool needs_repair() const { return dirty_; }

  friend void to_json(Json& j, const ObjectStoreCluster& c);
  friend void from_json(const Json& j, ObjectStoreCluster& c);

 private:
  void rebuild_ring();
  StorageNode& mutable_node(const Id& node_id);

  Id id_;
  ObjectStorePolicy policy_;
  std::map<Id, StorageNode> nodes_;
  std::map<std::string, StoredObject> objects_;
  std::map<Id, std::int64_t> farm_usage_;
  bool dirty_ = false;
  std::vector<std::pair<std::uint64_t, Id>> ring_;  // derived from nodes_
};

void to_json(Json& j, const StorageNode& n);
void from_json(const Json& j, StorageNode& n);
void to_json(Json& j, const StoredObject& o);
void from_json(const Json& j, StoredObject& o);
void to_json(Json& j, const RepairReport& r);

}  // namespace deskcloud
