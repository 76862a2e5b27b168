#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deskcloud/core/clock.hpp"
#include "deskcloud/core/id.hpp"
#include "deskcloud/core/json_support.hpp"
#include "deskcloud/core/types.hpp"

namespace deskcloud {

// Percentages are carried as integer hundredths ("centi-percent") so that
// aggregates are exact and reproducible.
std::int64_t quantize_pct(double cpu_pct);
std::string format_centi(std::int64_t centi);

struct StoredSample {
  SimTime at{};
  std::int64_t centi = 0;
};

struct InstanceSeries {
  Id instance_id;
  WorkloadClass workload_class = WorkloadClass::development;
  int vcpu = 1;
  std::deque<StoredSample> samples;
  std::uint64_t total_ingested = 0;
};

// Statistics over a set of samples. Demand is measured in 1e-4 vcpu units:
// a sample of p centi-percent on an instance with v vcpus demands p * v.
struct Stats {
  std::size_t sample_count = 0;
  std::int64_t mean_centi = 0;    // round half to even
  std::int64_t p95_centi = 0;     // nearest rank
  std::int64_t demand_sum = 0;
  std::int64_t p95_demand = 0;

  double mean_pct() const { return static_cast<double>(mean_centi) / 100.0; }
  double p95_pct() const { return static_cast<double>(p95_centi) / 100.0; }
};

// Integer division of num by den rounded half to even; den > 0.
std::int64_t div_round_half_even(std::int64_t num, std::int64_t den);
// Nearest-rank percentile (1..100) of an unsorted sample; empty input gives 0.
std::int64_t nearest_rank(std::vector<std::int64_t> values, int percentile);
Stats compute_stats(const std::vector<std::pair<std::int64_t, int>>& centi_and_vcpu);

struct InstanceRow {
  Id instance_id;
  WorkloadClass workload_class = WorkloadClass::development;
  Stats stats;
};

struct UtilizationReport {
  SimTime window_start{};
  SimTime window_end{};
  std::map<WorkloadClass, Stats> per_class;
  std::vector<InstanceRow> per_instance;

  bool empty() const { return per_instance.empty(); }
};

struct MeteringPolicy {
  std::size_t retention = 1000;
  std::size_t min_samples = 100;
  // Development instances whose mean demand stays below this many 1e-4 vcpu
  // units get a single vcpu.
  std::int64_t development_threshold = 6000;
  int service_minimum_vcpu = 2;
};

int recommend_vcpu(const Stats& stats, WorkloadClass cls, const MeteringPolicy& policy);

class Meter {
 public:
  // Caller guarantees the instance exists; samples for instances that never
  // ran are rejected with UnknownInstance.
  void ingest(const Instance& instance, SimTime at, double cpu_pct, std::size_t retention);

  // Samples with window_start <= at < window_end.
  UtilizationReport report(SimTime window_start, SimTime window_end) const;
  const std::map<Id, InstanceSeries>& series() const { return series_; }
  void forget(const Id& instance_id) { series_.erase(instance_id); }

  friend void to_json(Json& j, const Meter& m);
  friend void from_json(const Json& j, Meter& m);

 private:
  std::map<Id, InstanceSeries> series_;
};

std::string report_csv(const UtilizationReport& report);
Json report_plot_json(const Meter& meter, SimTime window_start, SimTime window_end);

void to_json(Json& j, const Stats& s);
void to_json(Json& j, const UtilizationReport& r);

}  // namespace deskcloud
