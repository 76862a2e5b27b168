#pragma once

#include <string>
#include <vector>

#include "deskcloud/control/state.hpp"

namespace deskcloud {

struct Violation {
  std::string invariant;
  std::string detail;
};

// Full cross-module invariant suite. Empty result means the state is sound.
std::vector<Violation> check_invariants(const ControlState& state);

void to_json(Json& j, const Violation& v);

}  // namespace deskcloud
