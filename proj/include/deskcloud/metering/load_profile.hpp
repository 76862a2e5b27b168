#pragma once

#include <cstdint>
#include <random>

#include "deskcloud/core/types.hpp"

namespace deskcloud {

// Seeded CPU load generator per workload class. Service instances follow a
// two-state on/off Markov chain; development instances idle near a low
// baseline with uniform noise.
class LoadProfile {
 public:
  LoadProfile(WorkloadClass cls, std::uint64_t seed);

  double next_pct();
  // Multiplies subsequent samples by factor (clamped to 100%) for n samples.
  void burst(double factor, int samples);

 private:
  double uniform();

  WorkloadClass cls_;
  std::mt19937_64 rng_;
  bool on_ = false;
  double burst_factor_ = 1.0;
  int burst_left_ = 0;
};

}  // namespace deskcloud
