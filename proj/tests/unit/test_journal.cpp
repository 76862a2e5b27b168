#include <filesystem>

#include "doctest.h"

#include "deskcloud/control/control_plane.hpp"
#include "deskcloud/control/journal.hpp"
#include "deskcloud/core/error.hpp"
#include "support/gen.hpp"
#include "support/world.hpp"

using namespace deskcloud;
using deskcloud::testing::make_world;
using deskcloud::testing::WorldOptions;

namespace {

JournalRecord rec(std::uint64_t seq, const std::string& name) {
  return JournalRecord{seq, name, Json{{"n", seq}}, "tag", "actor", false, "digest"};
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("deskcloud_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// A short but varied history: provisioning, failures, storage and metering.
void busy_history(testing::World& w, std::uint64_t seed) {
  testing::Gen g(seed);
  std::vector<Id> live;
  for (int step = 0; step < 40; ++step) {
    try {
      switch (g.irange(0, 6)) {
        case 0:
        case 1:
          for (const auto& i : w.provision(w.admin, g.irange(1, 3))) live.push_back(i);
          break;
        case 2:
          if (!live.empty()) w.sys("instance.stop", {{"instance_id", g.pick(live)}});
          break;
        case 3:
          w.sys("object.put", {{"farm_id", w.farm}, {"key", "k" + std::to_string(g.irange(0, 9))}, {"size_bytes", g.irange(1, 5000)}});
          break;
        case 4:
          w.sys("sim.tick", {{"ms", g.irange(0, 12000)}});
          break;
        case 5:
          if (!live.empty()) w.sys("meter.ingest", {{"instance_id", g.pick(live)}, {"cpu_pct", g.irange(0, 100)}});
          break;
        default:
          w.sys("sim.kill_node", {{"node_id", g.pick(w.nodes)}});
      }
    } catch (const Error&) {
    }
  }
}

}  // namespace

TEST_SUITE("journal") {
  TEST_CASE("frames round trip") {
    std::string bytes;
    for (std::uint64_t s = 1; s <= 5; ++s) bytes += encode_record(rec(s, "x"));
    const auto r = decode_journal(bytes);
    CHECK(r.dropped_bytes == 0);
    REQUIRE(r.records.size() == 5);
    CHECK(r.records[4].sequence == 5);
    CHECK(r.records[2].payload == Json{{"n", 3}});
    CHECK(decode_journal("").records.empty());
  }

  TEST_CASE("a torn final frame is dropped at every cut point") {
    std::string bytes;
    for (std::uint64_t s = 1; s <= 3; ++s) bytes += encode_record(rec(s, "x"));
    const std::size_t last = bytes.size() - encode_record(rec(3, "x")).size();
    for (std::size_t cut = last + 1; cut < bytes.size(); ++cut) {
      const auto r = decode_journal(std::string_view(bytes).substr(0, cut));
      CHECK(r.records.size() == 2);
      CHECK(r.dropped_bytes == cut - last);
    }
    std::string flipped = bytes;
    flipped[bytes.size() - 2] ^= 0x01;
    const auto r = decode_journal(flipped);
    CHECK(r.records.size() == 2);
    CHECK(r.dropped_bytes > 0);
  }

  TEST_CASE("damage before the last frame is corruption") {
    std::string bytes;
    for (std::uint64_t s = 1; s <= 3; ++s) bytes += encode_record(rec(s, "x"));
    bytes[12] ^= 0x20;
    try {
      (void)decode_journal(bytes);
      FAIL("expected CorruptSnapshot");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptSnapshot);
    }
  }

  TEST_CASE("snapshot byte flips are always detected") {
    auto w = make_world();
    w.provision(w.admin, 2);
    const std::string snap = encode_snapshot(state_to_json(w.cp->state()));
    CHECK(decode_snapshot(snap) == state_to_json(w.cp->state()));
    testing::Gen g(4);
    for (int i = 0; i < 300; ++i) {
      std::string bad = snap;
      const auto at = static_cast<std::size_t>(g.range(0, static_cast<std::int64_t>(bad.size()) - 1));
      bad[at] = static_cast<char>(bad[at] ^ (1 << g.irange(0, 7)));
      CHECK_THROWS_AS(decode_snapshot(bad), Error);
    }
    CHECK_THROWS_AS(decode_snapshot(snap.substr(0, snap.size() - 1)), Error);
  }

  TEST_CASE("state json round trip preserves the digest") {
    auto w = make_world();
    busy_history(w, 1);
    const ControlState copy = state_from_json(state_to_json(w.cp->state()));
    CHECK(state_digest(copy) == w.cp->digest());
  }

  TEST_CASE("replaying the journal reproduces the state") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto w = make_world();
      busy_history(w, seed);
      ControlPlane fresh(Config{}, false);
      fresh.replay(w.cp->journal());
      CHECK(fresh.digest() == w.cp->digest());
    }
  }

  TEST_CASE("snapshot plus journal suffix restores after a crash") {
    const auto dir = fresh_dir("restore");
    auto w = make_world();
    w.provision(w.admin, 3);
    w.cp->open_data_dir(dir.string());
    busy_history(w, 9);
    const std::string expect = w.cp->digest();
    RestoreReport rep;
    ControlPlane back = ControlPlane::restore(Config{}, dir.string(), &rep);
    CHECK(back.digest() == expect);
    CHECK(rep.digest == expect);
    CHECK(rep.dropped_bytes == 0);

    // Tear the journal tail and restore again: the last record is lost.
    const auto jpath = (dir / "journal.log").string();
    std::string bytes = read_file(jpath);
    REQUIRE(bytes.size() > 10);
    write_file_atomic(jpath, std::string_view(bytes).substr(0, bytes.size() - 3));
    ControlPlane torn = ControlPlane::restore(Config{}, dir.string(), &rep);
    CHECK(rep.dropped_bytes > 0);
    CHECK(torn.state().mutation_sequence + 1 == back.state().mutation_sequence);
    // New commands append after the rewritten tail.
    torn.submit_system("sim.tick", {{"ms", 1}});
    ControlPlane again = ControlPlane::restore(Config{}, dir.string(), &rep);
    CHECK(again.digest() == torn.digest());
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("a corrupt snapshot refuses to load") {
    const auto dir = fresh_dir("corrupt");
    auto w = make_world();
    w.cp->open_data_dir(dir.string());
    const auto spath = (dir / "snapshot.dcs").string();
    std::string bytes = read_file(spath);
    bytes[bytes.size() / 2] ^= 0x04;
    write_file_atomic(spath, bytes);
    try {
      (void)ControlPlane::restore(Config{}, dir.string());
      FAIL("expected CorruptSnapshot");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptSnapshot);
    }
    std::filesystem::remove_all(dir);
  }
}
