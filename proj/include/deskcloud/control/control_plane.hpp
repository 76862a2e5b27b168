#pragma once

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "deskcloud/control/commands.hpp"
#include "deskcloud/control/config.hpp"
#include "deskcloud/control/invariants.hpp"
#include "deskcloud/control/journal.hpp"
#include "deskcloud/control/state.hpp"

namespace deskcloud {

struct RestoreReport {
  std::size_t replayed = 0;
  std::size_t dropped_bytes = 0;
  std::string digest;
};

// Single writer over ControlState. Every mutation goes through submit(),
// is applied atomically, journaled, and followed by one reconciliation step.
class ControlPlane {
 public:
  // With bootstrap the configured admin account is created as the first
  // journaled command.
  explicit ControlPlane(Config config, bool bootstrap = true);

  Json submit(const std::string& name, const Json& payload, const std::string& token);
  Json submit_system(const std::string& name, const Json& payload);
  Json login(const std::string& username, const std::string& password,
             std::optional<std::set<Surface>> surfaces = std::nullopt);

  // Read-only views; requires a token allowed to view the query's surface.
  Json query(const std::string& what, const Json& params, const std::string& token) const;
  static std::vector<std::string> query_names();

  const ControlState& state() const { return state_; }
  const Config& config() const { return config_; }
  std::string digest() const { return state_digest(state_); }
  const std::vector<JournalRecord>& journal() const { return journal_; }

  // Test mode: run the invariant suite after every command and keep what
  // it finds.
  void set_step_checks(bool on) { step_checks_ = on; }
  const std::vector<std::pair<std::uint64_t, Violation>>& step_violations() const { return step_violations_; }

  // Re-applies journal records past the state's mutation sequence.
  std::size_t replay(std::span<const JournalRecord> records);
  static ControlPlane from_snapshot(Config config, const Json& state, std::span<const JournalRecord> suffix);

  // Persistence under a data directory: snapshot.dcs plus journal.log.
  void open_data_dir(const std::string& dir);
  void checkpoint();
  static ControlPlane restore(Config config, const std::string& dir, RestoreReport* report = nullptr);

 private:
  Json execute(const CommandSpec& spec, const Json& payload, const std::optional<Id>& actor, const std::string& token,
               bool system, bool replay);

  Config config_;
  ControlState state_;
  std::vector<JournalRecord> journal_;
  std::string data_dir_;
  std::unique_ptr<JournalWriter> writer_;
  bool step_checks_ = false;
  std::vector<std::pair<std::uint64_t, Violation>> step_violations_;
};

}  // namespace deskcloud
