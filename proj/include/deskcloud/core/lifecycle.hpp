#pragma once

#include <optional>
#include <span>
#include <utility>

#include "deskcloud/core/types.hpp"

namespace deskcloud {

struct LifecycleEdge {
  LifecycleState from;
  LifecycleEvent event;
  LifecycleState to;
};

// The declared adjacency set of the instance state machine.
std::span<const LifecycleEdge> lifecycle_edges() noexcept;

std::optional<LifecycleState> next_state(LifecycleState from, LifecycleEvent event) noexcept;

// Applies one lifecycle event. Leaving the host-holding states clears
// host_id; entering Running from a non-hosted state expects the caller to
// set host_id in the same step. Throws IllegalTransition and leaves the
// input untouched for any pair outside the edge set.
Instance transition(const Instance& instance, LifecycleEvent event);

}  // namespace deskcloud
