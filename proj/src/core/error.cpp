#include "deskcloud/core/error.hpp"

namespace deskcloud {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::NoLiveHost: return "NoLiveHost";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::HostDown: return "HostDown";
    case ErrorCode::CrossPoolMigration: return "CrossPoolMigration";
    case ErrorCode::CapacityExhausted: return "CapacityExhausted";
    case ErrorCode::DrainInfeasible: return "DrainInfeasible";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::CrossFarmNetwork: return "CrossFarmNetwork";
    case ErrorCode::WrongState: return "WrongState";
    case ErrorCode::NoLiveBackend: return "NoLiveBackend";
    case ErrorCode::QuorumUnavailable: return "QuorumUnavailable";
    case ErrorCode::SecondaryUnreachable: return "SecondaryUnreachable";
    case ErrorCode::SiteUnavailable: return "SiteUnavailable";
    case ErrorCode::BadCredential: return "BadCredential";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::StandbyNotReady: return "StandbyNotReady";
    case ErrorCode::AlreadyActive: return "AlreadyActive";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedCommand: return "MalformedCommand";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::ScenarioParseError: return "ScenarioParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Unauthorized:
    case ErrorCode::BadCredential:
    case ErrorCode::UnknownUser:
      return 401;
    case ErrorCode::Forbidden:
      return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownTemplate:
    case ErrorCode::UnknownInstance:
      return 404;
    case ErrorCode::IllegalTransition:
    case ErrorCode::HostDown:
    case ErrorCode::CrossPoolMigration:
    case ErrorCode::DuplicateName:
    case ErrorCode::CrossFarmNetwork:
    case ErrorCode::WrongState:
    case ErrorCode::NoLiveBackend:
    case ErrorCode::StandbyNotReady:
    case ErrorCode::AlreadyActive:
    case ErrorCode::Conflict:
      return 409;
    case ErrorCode::NoLiveHost:
    case ErrorCode::CapacityExceeded:
    case ErrorCode::CapacityExhausted:
    case ErrorCode::DrainInfeasible:
    case ErrorCode::QuotaExceeded:
    case ErrorCode::PoolExhausted:
    case ErrorCode::InsufficientData:
      return 422;
    case ErrorCode::QuorumUnavailable:
    case ErrorCode::SecondaryUnreachable:
    case ErrorCode::SiteUnavailable:
      return 503;
    case ErrorCode::InvalidArgument:
    case ErrorCode::MalformedCommand:
    case ErrorCode::ScenarioParseError:
      return 400;
    case ErrorCode::CorruptSnapshot:
    case ErrorCode::InvariantViolation:
      return 500;
  }
  return 500;
}

}  // namespace deskcloud
