#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deskcloud {

enum class ErrorCode {
  IllegalTransition,
  NoLiveHost,
  CapacityExceeded,
  HostDown,
  CrossPoolMigration,
  CapacityExhausted,
  DrainInfeasible,
  DuplicateName,
  Unauthorized,
  Forbidden,
  QuotaExceeded,
  UnknownTemplate,
  NotFound,
  PoolExhausted,
  CrossFarmNetwork,
  WrongState,
  NoLiveBackend,
  QuorumUnavailable,
  SecondaryUnreachable,
  SiteUnavailable,
  BadCredential,
  UnknownUser,
  StandbyNotReady,
  AlreadyActive,
  InsufficientData,
  UnknownInstance,
  InvalidArgument,
  MalformedCommand,
  Conflict,
  CorruptSnapshot,
  ScenarioParseError,
  InvariantViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

// HTTP status the control API answers with for a domain error.
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace deskcloud
