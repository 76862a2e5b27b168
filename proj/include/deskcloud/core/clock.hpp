#pragma once

#include <chrono>
#include <cstdint>

namespace deskcloud {

// Epoch of the simulated clock. Only used as a time_point tag; there is no
// static now(), time only moves when the control loop advances it.
struct SimEpoch {
  using rep = std::int64_t;
  using period = std::milli;
  using duration = std::chrono::milliseconds;
  using time_point = std::chrono::time_point<SimEpoch>;
  static constexpr bool is_steady = true;
};

using Duration = std::chrono::milliseconds;
using SimTime = SimEpoch::time_point;

constexpr SimTime sim_time_ms(std::int64_t ms) { return SimTime{Duration{ms}}; }
constexpr std::int64_t to_ms(SimTime t) { return t.time_since_epoch().count(); }

class SimClock {
 public:
  SimTime now() const noexcept { return now_; }
  void advance(Duration d) noexcept {
    if (d.count() > 0) now_ += d;
  }
  void set(SimTime t) noexcept {
    if (t > now_) now_ = t;
  }

 private:
  SimTime now_{};
};

}  // namespace deskcloud
