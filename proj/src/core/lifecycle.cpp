#include "deskcloud/core/lifecycle.hpp"

#include <array>
#include <string>

namespace deskcloud {

namespace {

using S = LifecycleState;
using E = LifecycleEvent;

constexpr std::array<LifecycleEdge, 10> kEdges{{
    {S::Requested, E::attribute, S::Attributed},
    {S::Attributed, E::start, S::Running},
    {S::Running, E::migrate_begin, S::Migrating},
    {S::Migrating, E::migrate_end, S::Running},
    {S::Running, E::stop, S::Stopped},
    {S::Running, E::fail, S::Failed},
    {S::Migrating, E::fail, S::Failed},
    {S::Stopped, E::destroy, S::Destroyed},
    {S::Failed, E::destroy, S::Destroyed},
    {S::Stopped, E::start, S::Running},
}};

}  // namespace

std::span<const LifecycleEdge> lifecycle_edges() noexcept { return kEdges; }

std::optional<LifecycleState> next_state(LifecycleState from, LifecycleEvent event) noexcept {
  for (const auto& e : kEdges)
    if (e.from == from && e.event == event) return e.to;
  return std::nullopt;
}

Instance transition(const Instance& instance, LifecycleEvent event) {
  auto to = next_state(instance.state, event);
  if (!to)
    raise(ErrorCode::IllegalTransition, "illegal transition: " + std::string(enum_name(instance.state)) + " on " +
                                            std::string(enum_name(event)));
  Instance out = instance;
  out.state = *to;
  if (!holds_host(*to)) out.host_id.reset();
  if (*to == S::Running) out.ever_started = true;
  return out;
}

}  // namespace deskcloud
