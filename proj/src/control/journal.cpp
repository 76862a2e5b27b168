#include "deskcloud/control/journal.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"

namespace deskcloud {

namespace {

constexpr std::string_view kSnapshotMagic = "deskcloud-snapshot v1 ";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

void to_json(Json& j, const JournalRecord& r) {
  j = Json{{"seq", r.sequence}, {"name", r.name}, {"payload", r.payload}, {"token", r.token}, {"actor", r.actor}, {"system", r.system}, {"result_digest", r.result_digest}};
}

void from_json(const Json& j, JournalRecord& r) {
  j.at("seq").get_to(r.sequence);
  j.at("name").get_to(r.name);
  r.payload = j.at("payload");
  j.at("token").get_to(r.token);
  j.at("actor").get_to(r.actor);
  j.at("system").get_to(r.system);
  j.at("result_digest").get_to(r.result_digest);
}

std::string encode_record(const JournalRecord& record) {
  const std::string body = Json(record).dump();
  std::string out;
  out.reserve(body.size() + 8);
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  put_u32(out, crc32_of(body));
  out += body;
  return out;
}

JournalReadResult decode_journal(std::string_view bytes) {
  JournalReadResult result;
  std::size_t at = 0;
  while (at < bytes.size()) {
    if (bytes.size() - at < 8) {
      result.dropped_bytes = bytes.size() - at;
      break;
    }
    const std::uint32_t len = get_u32(bytes, at);
    const std::uint32_t crc = get_u32(bytes, at + 4);
    if (bytes.size() - at - 8 < len) {
      result.dropped_bytes = bytes.size() - at;
      break;
    }
    const std::string_view body = bytes.substr(at + 8, len);
    const bool last = at + 8 + len == bytes.size();
    if (crc32_of(body) != crc) {
      if (last) {
        result.dropped_bytes = bytes.size() - at;
        break;
      }
      raise(ErrorCode::CorruptSnapshot, "journal checksum mismatch at offset " + std::to_string(at));
    }
    try {
      result.records.push_back(Json::parse(body).get<JournalRecord>());
    } catch (const Json::exception& e) {
      raise(ErrorCode::CorruptSnapshot, std::string("journal record unreadable: ") + e.what());
    }
    at += 8 + len;
  }
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::NotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::InvalidArgument, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorCode::InvalidArgument, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

JournalReadResult read_journal_file(const std::string& path) {
  if (!std::filesystem::exists(path)) return {};
  return decode_journal(read_file(path));
}

JournalWriter::JournalWriter(const std::string& path) { reset(path); }

void JournalWriter::reset(const std::string& path) {
  if (out_.is_open()) out_.close();
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) raise(ErrorCode::InvalidArgument, "cannot open journal " + path);
}

void JournalWriter::append(const JournalRecord& record) {
  const std::string frame = encode_record(record);
  out_.write(frame.data(), static_cast<std::streamsize>(frame.size()));
  out_.flush();
}

std::string encode_snapshot(const Json& state) {
  const std::string body = state.dump();
  std::string out(kSnapshotMagic);
  out += sha256_hex(body);
  out += '\n';
  out += body;
  return out;
}

Json decode_snapshot(std::string_view bytes) {
  if (bytes.substr(0, kSnapshotMagic.size()) != kSnapshotMagic)
    raise(ErrorCode::CorruptSnapshot, "snapshot header missing");
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) raise(ErrorCode::CorruptSnapshot, "snapshot header unterminated");
  const std::string_view digest = bytes.substr(kSnapshotMagic.size(), nl - kSnapshotMagic.size());
  const std::string_view body = bytes.substr(nl + 1);
  if (sha256_hex(body) != digest) raise(ErrorCode::CorruptSnapshot, "snapshot digest mismatch");
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    raise(ErrorCode::CorruptSnapshot, std::string("snapshot body unreadable: ") + e.what());
  }
}

void write_snapshot_file(const std::string& path, const Json& state) { write_file_atomic(path, encode_snapshot(state)); }

Json read_snapshot_file(const std::string& path) { return decode_snapshot(read_file(path)); }

}  // namespace deskcloud
