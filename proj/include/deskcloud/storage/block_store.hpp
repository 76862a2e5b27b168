#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deskcloud/core/id.hpp"
#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

enum class ReplicationMode { sync, async };

template <>
struct EnumNames<ReplicationMode> {
  static constexpr std::array<std::pair<ReplicationMode, std::string_view>, 2> names{{
      {ReplicationMode::sync, "sync"}, {ReplicationMode::async, "async"}}};
};

struct JournalEntry {
  std::uint64_t sequence = 0;
  std::int64_t block_index = 0;
  std::string content_hash;
  bool operator==(const JournalEntry&) const = default;
};

// A block device. Replicated volumes mirror their write journal to a disk on
// the peer site, either before the write is acknowledged (sync) or through a
// bounded shipping queue (async).
struct BlockVolume {
  Id id;
  Id farm_id;
  std::string name;
  std::int64_t size_gib = 0;
  Id site_id;
  std::optional<Id> attached_instance;
  bool replicated = false;
  ReplicationMode mode = ReplicationMode::sync;
  std::optional<Id> peer_site;
  bool peer_connected = false;
  std::vector<JournalEntry> journal;
  std::vector<JournalEntry> peer_journal;
  std::deque<JournalEntry> pending;
  bool lost = false;
  std::uint64_t next_sequence = 1;
};

struct WriteAck {
  Id volume_id;
  std::uint64_t sequence = 0;
  bool mirrored = false;
};

struct VolumeFailover {
  Id volume_id;
  bool lost = false;
  std::size_t unshipped_writes = 0;
  // Acknowledged sync writes absent from the promoted copy; always zero
  // unless replication is broken.
  std::size_t missing_acked = 0;
};

// Farm-wide shared file area carved from block storage.
struct FarmShare {
  std::int64_t quota_gib = 0;
  std::int64_t used_gib = 0;
};

class BlockStore {
 public:
  // QuotaExceeded when existing volumes plus extra_used_gib plus the new
  // volume exceed quota_gib.
  const BlockVolume& create(BlockVolume volume, std::int64_t quota_gib, std::int64_t extra_used_gib);
  void attach(const Id& volume_id, const Id& instance_id);
  void detach_instance(const Id& instance_id);

  WriteAck write(const Id& volume_id, std::int64_t block_index, const std::string& content_hash, bool site_reachable,
                 bool peer_reachable, std::size_t async_queue_limit);
  // Moves queued async writes to the peer copy. Returns the number shipped.
  std::size_t ship(const Id& volume_id, bool peer_reachable);

  // Promotes the peer copy; unreplicated volumes on the failed site are lost.
  VolumeFailover fail_over(const Id& volume_id);
  // Full resync after the former primary site comes back.
  void reconnect(const Id& volume_id);

  const BlockVolume& get(const Id& volume_id) const;
  const std::map<Id, BlockVolume>& volumes() const { return volumes_; }
  std::int64_t farm_usage_gib(const Id& farm_id) const;
  std::vector<Id> volumes_of_farm(const Id& farm_id) const;

  friend void to_json(Json& j, const BlockStore& s);
  friend void from_json(const Json& j, BlockStore& s);

 private:
  BlockVolume& mutable_get(const Id& volume_id);
  std::map<Id, BlockVolume> volumes_;
};

void to_json(Json& j, const JournalEntry& e);
void from_json(const Json& j, JournalEntry& e);
void to_json(Json& j, const BlockVolume& v);
void from_json(const Json& j, BlockVolume& v);
void to_json(Json& j, const VolumeFailover& f);
void to_json(Json& j, const FarmShare& s);
void from_json(const Json& j, FarmShare& s);

}  // namespace deskcloud
