#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

struct JournalRecord {
  std::uint64_t sequence = 0;
  std::string name;
  Json payload;
  std::string token;  // digest prefix of the bearer token, for audit only
  std::string actor;  // user id; empty for system commands
  bool system = false;
  std::string result_digest;
};

void to_json(Json& j, const JournalRecord& r);
void from_json(const Json& j, JournalRecord& r);

// Frame: u32 little-endian body length, u32 little-endian CRC-32 of the body,
// JSON body.
std::string encode_record(const JournalRecord& record);

struct JournalReadResult {
  std::vector<JournalRecord> records;
  std::size_t dropped_bytes = 0;  // incomplete or torn final frame
};

// A short or checksum-failing final frame is dropped and reported; damage
// before the last frame raises CorruptSnapshot.
JournalReadResult decode_journal(std::string_view bytes);
JournalReadResult read_journal_file(const std::string& path);

class JournalWriter {
 public:
  JournalWriter() = default;
  // Opens for append.
  explicit JournalWriter(const std::string& path);
  void append(const JournalRecord& record);
  bool is_open() const { return out_.is_open(); }
  void reset(const std::string& path);

 private:
  std::ofstream out_;
};

// Snapshot file: "deskcloud-snapshot v1 <sha256 of body>\n" then the body.
std::string encode_snapshot(const Json& state);
Json decode_snapshot(std::string_view bytes);
void write_snapshot_file(const std::string& path, const Json& state);
Json read_snapshot_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace deskcloud
