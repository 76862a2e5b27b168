#include "deskcloud/metering/load_profile.hpp"

#include <algorithm>

namespace deskcloud {

LoadProfile::LoadProfile(WorkloadClass cls, std::uint64_t seed) : cls_(cls), rng_(seed) {}

// Explicit conversion keeps sequences identical across standard libraries.
double LoadProfile::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

double LoadProfile::next_pct() {
  double pct = 0.0;
  if (cls_ == WorkloadClass::service) {
    const double u = uniform();
    if (on_ && u < 0.15)
      on_ = false;
    else if (!on_ && u < 0.35)
      on_ = true;
    pct = on_ ? 60.0 + 35.0 * uniform() : 15.0 + 20.0 * uniform();
  } else {
    pct = 8.0 + 10.0 * (uniform() - 0.5);
  }
  if (burst_left_ > 0) {
    pct *= burst_factor_;
    --burst_left_;
  }
  return std::clamp(pct, 0.0, 100.0);
}

void LoadProfile::burst(double factor, int samples) {
  burst_factor_ = std::max(0.0, factor);
  burst_left_ = std::max(0, samples);
}

}  // namespace deskcloud
