#include "deskcloud/storage/block_store.hpp"

#include <algorithm>

#include "deskcloud/core/error.hpp"

namespace deskcloud {

BlockVolume& BlockStore::mutable_get(const Id& volume_id) {
  auto it = volumes_.find(volume_id);
  if (it == volumes_.end()) raise(ErrorCode::NotFound, "unknown volume: " + volume_id.value);
  return it->second;
}

const BlockVolume& BlockStore::get(const Id& volume_id) const { return const_cast<BlockStore*>(this)->mutable_get(volume_id); }

std::int64_t BlockStore::farm_usage_gib(const Id& farm_id) const {
  std::int64_t total = 0;
  for (const auto& [_, v] : volumes_)
    if (v.farm_id == farm_id && !v.lost) total += v.size_gib;
  return total;
}

std::vector<Id> BlockStore::volumes_of_farm(const Id& farm_id) const {
  std::vector<Id> out;
  for (const auto& [id, v] : volumes_)
    if (v.farm_id == farm_id) out.push_back(id);
  return out;
}

const BlockVolume& BlockStore::create(BlockVolume volume, std::int64_t quota_gib, std::int64_t extra_used_gib) {
  if (volume.size_gib < 1) raise(ErrorCode::InvalidArgument, "volume size must be >= 1 GiB");
  if (volumes_.contains(volume.id)) raise(ErrorCode::Conflict, "volume exists: " + volume.id.value);
  if (volume.replicated && !volume.peer_site) raise(ErrorCode::InvalidArgument, "replicated volume needs a peer site");
  if (farm_usage_gib(volume.farm_id) + extra_used_gib + volume.size_gib > quota_gib)
    raise(ErrorCode::QuotaExceeded, "farm block quota exceeded");
  volume.peer_connected = volume.replicated;
  volume.journal.clear();
  volume.peer_journal.clear();
  volume.pending.clear();
  volume.next_sequence = 1;
  volume.lost = false;
  Id id = volume.id;
  return volumes_.emplace(id, std::move(volume)).first->second;
}

void BlockStore::attach(const Id& volume_id, const Id& instance_id) {
  BlockVolume& v = mutable_get(volume_id);
  if (v.attached_instance && *v.attached_instance != instance_id)
    raise(ErrorCode::Conflict, "volume already attached to " + v.attached_instance->value);
  v.attached_instance = instance_id;
}

void BlockStore::detach_instance(const Id& instance_id) {
  for (auto& [_, v] : volumes_)
    if (v.attached_instance == instance_id) v.attached_instance.reset();
}

WriteAck BlockStore::write(const Id& volume_id, std::int64_t block_index, const std::string& content_hash,
                           bool site_reachable, bool peer_reachable, std::size_t async_queue_limit) {
  BlockVolume& v = mutable_get(volume_id);
  if (v.lost) raise(ErrorCode::WrongState, "volume was lost with its site: " + v.id.value);
  if (!site_reachable) raise(ErrorCode::SiteUnavailable, "volume site is unreachable: " + v.site_id.value);
  if (block_index < 0) raise(ErrorCode::InvalidArgument, "block index must be >= 0");

  JournalEntry entry{v.next_sequence, block_index, content_hash};
  bool mirrored = false;
  if (v.replicated && v.peer_connected) {
    if (v.mode == ReplicationMode::sync) {
      if (!peer_reachable) raise(ErrorCode::SecondaryUnreachable, "sync secondary unreachable for " + v.id.value);
      v.peer_journal.push_back(entry);
      mirrored = true;
    } else {
      if (v.pending.size() >= async_queue_limit)
        raise(ErrorCode::SecondaryUnreachable, "async replication backlog full for " + v.id.value);
      v.pending.push_back(entry);
    }
  } else if (v.replicated) {
    // Standalone after a failover; shipped by the resync on reconnect.
    v.pending.push_back(entry);
  }
  v.journal.push_back(entry);
  ++v.next_sequence;
  return WriteAck{v.id, entry.sequence, mirrored};
}

std::size_t BlockStore::ship(const Id& volume_id, bool peer_reachable) {
  BlockVolume& v = mutable_get(volume_id);
  if (!v.replicated || !v.peer_connected || !peer_reachable || v.lost) return 0;
  const std::size_t n = v.pending.size();
  v.peer_journal.insert(v.peer_journal.end(), v.pending.begin(), v.pending.end());
  v.pending.clear();
  return n;
}

VolumeFailover BlockStore::fail_over(const Id& volume_id) {
  BlockVolume& v = mutable_get(volume_id);
  VolumeFailover out{v.id};
  if (v.lost) {
    out.lost = true;
    return out;
  }
  if (!v.replicated || !v.peer_site) {
    v.lost = true;
    v.attached_instance.reset();
    out.lost = true;
    return out;
  }
  // Entries acknowledged on the primary but not present on the peer.
  std::size_t missing = 0;
  for (const auto& e : v.journal)
    if (!std::binary_search(v.peer_journal.begin(), v.peer_journal.end(), e,
                            [](const JournalEntry& a, const JournalEntry& b) { return a.sequence < b.sequence; }))
      ++missing;
  if (v.mode == ReplicationMode::sync && v.peer_connected)
    out.missing_acked = missing;
  else
    out.unshipped_writes = missing;

  std::swap(v.journal, v.peer_journal);
  v.peer_journal.clear();
  v.pending.clear();
  std::swap(v.site_id, *v.peer_site);
  v.peer_connected = false;
  v.next_sequence = v.journal.empty() ? 1 : v.journal.back().sequence + 1;
  return out;
}

void BlockStore::reconnect(const Id& volume_id) {
  BlockVolume& v = mutable_get(volume_id);
  if (!v.replicated || v.lost || v.peer_connected) return;
  v.peer_journal = v.journal;
  v.pending.clear();
  v.peer_connected = true;
}

void to_json(Json& j, const JournalEntry& e) {
  j = Json{{"seq", e.sequence}, {"block", e.block_index}, {"hash", e.content_hash}};
}

void from_json(const Json& j, JournalEntry& e) {
  j.at("seq").get_to(e.sequence);
  j.at("block").get_to(e.block_index);
  j.at("hash").get_to(e.content_hash);
}

void to_json(Json& j, const BlockVolume& v) {
  j = Json{{"id", v.id},
           {"farm_id", v.farm_id},
           {"name", v.name},
           {"size_gib", v.size_gib},
           {"site_id", v.site_id},
           {"attached_instance", v.attached_instance},
           {"replicated", v.replicated},
           {"mode", v.mode},
           {"peer_site", v.peer_site},
           {"peer_connected", v.peer_connected},
           {"journal", v.journal},
           {"peer_journal", v.peer_journal},
           {"pending", std::vector<JournalEntry>(v.pending.begin(), v.pending.end())},
           {"lost", v.lost},
           {"next_sequence", v.next_sequence}};
}

void from_json(const Json& j, BlockVolume& v) {
  j.at("id").get_to(v.id);
  j.at("farm_id").get_to(v.farm_id);
  v.name = field_or<std::string>(j, "name", "");
  j.at("size_gib").get_to(v.size_gib);
  j.at("site_id").get_to(v.site_id);
  v.attached_instance = opt_field<Id>(j, "attached_instance");
  j.at("replicated").get_to(v.replicated);
  j.at("mode").get_to(v.mode);
  v.peer_site = opt_field<Id>(j, "peer_site");
  j.at("peer_connected").get_to(v.peer_connected);
  j.at("journal").get_to(v.journal);
  j.at("peer_journal").get_to(v.peer_journal);
  auto pending = j.at("pending").get<std::vector<JournalEntry>>();
  v.pending.assign(pending.begin(), pending.end());
  j.at("lost").get_to(v.lost);
  j.at("next_sequence").get_to(v.next_sequence);
}

void to_json(Json& j, const VolumeFailover& f) {
  j = Json{{"volume_id", f.volume_id}, {"lost", f.lost}, {"unshipped_writes", f.unshipped_writes}, {"missing_acked", f.missing_acked}};
}

void to_json(Json& j, const FarmShare& s) { j = Json{{"quota_gib", s.quota_gib}, {"used_gib", s.used_gib}}; }

void from_json(const Json& j, FarmShare& s) {
  j.at("quota_gib").get_to(s.quota_gib);
  j.at("used_gib").get_to(s.used_gib);
}

void to_json(Json& j, const BlockStore& s) {
  j = Json::array();
  for (const auto& [_, v] : s.volumes_) j.push_back(v);
}

void from_json(const Json& j, BlockStore& s) {
  s.volumes_.clear();
  for (const auto& v : j) {
    auto vol = v.get<BlockVolume>();
    s.volumes_.emplace(vol.id, std::move(vol));
  }
}

}  // namespace deskcloud
