#include "deskcloud/metering/metering.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deskcloud/core/error.hpp"

namespace deskcloud {

std::int64_t quantize_pct(double cpu_pct) {
  if (!std::isfinite(cpu_pct) || cpu_pct < 0.0 || cpu_pct > 100.0)
    raise(ErrorCode::InvalidArgument, "cpu_pct must be within [0, 100]");
  return std::llround(cpu_pct * 100.0);
}

std::string format_centi(std::int64_t centi) {
  const char* sign = centi < 0 ? "-" : "";
  const std::int64_t a = centi < 0 ? -centi : centi;
  std::string frac = std::to_string(a % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return sign + std::to_string(a / 100) + "." + frac;
}

std::int64_t div_round_half_even(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  std::int64_t r = num % den;
  if (r < 0) {
    r += den;
    --q;
  }
  const std::int64_t twice = 2 * r;
  if (twice > den || (twice == den && (q % 2 != 0))) ++q;
  return q;
}

std::int64_t nearest_rank(std::vector<std::int64_t> values, int percentile) {
  if (values.empty()) return 0;
  const std::size_t n = values.size();
  // ceil(p * n / 100) as a 1-based rank.
  std::size_t rank = (static_cast<std::size_t>(percentile) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

Stats compute_stats(const std::vector<std::pair<std::int64_t, int>>& centi_and_vcpu) {
  Stats s;
  s.sample_count = centi_and_vcpu.size();
  if (centi_and_vcpu.empty()) return s;
  std::vector<std::int64_t> pct, demand;
  pct.reserve(s.sample_count);
  demand.reserve(s.sample_count);
  std::int64_t sum = 0;
  for (const auto& [c, v] : centi_and_vcpu) {
    pct.push_back(c);
    demand.push_back(c * v);
    sum += c;
    s.demand_sum += c * v;
  }
  s.mean_centi = div_round_half_even(sum, static_cast<std::int64_t>(s.sample_count));
  s.p95_centi = nearest_rank(std::move(pct), 95);
  s.p95_demand = nearest_rank(std::move(demand), 95);
  return s;
}

int recommend_vcpu(const Stats& stats, WorkloadClass cls, const MeteringPolicy& policy) {
  if (stats.sample_count < policy.min_samples)
    raise(ErrorCode::InsufficientData, std::to_string(stats.sample_count) + " samples, need " +
                                           std::to_string(policy.min_samples));
  const auto ceil_vcpu = [](std::int64_t units) { return static_cast<int>((units + 9999) / 10000); };
  const int p95_vcpu = std::max(1, ceil_vcpu(stats.p95_demand));
  if (cls == WorkloadClass::development) {
    const auto n = static_cast<std::int64_t>(stats.sample_count);
    if (stats.demand_sum < policy.development_threshold * n) return 1;
    return p95_vcpu;
  }
  return std::max(policy.service_minimum_vcpu, p95_vcpu);
}

void Meter::ingest(const Instance& instance, SimTime at, double cpu_pct, std::size_t retention) {
  if (!instance.ever_started) raise(ErrorCode::UnknownInstance, "instance never ran: " + instance.id.value);
  if (retention == 0) raise(ErrorCode::InvalidArgument, "retention must be >= 1");
  const std::int64_t centi = quantize_pct(cpu_pct);
  auto [it, inserted] = series_.try_emplace(instance.id);
  InstanceSeries& s = it->second;
  if (inserted) s.instance_id = instance.id;
  if (!s.samples.empty() && at < s.samples.back().at)
    raise(ErrorCode::InvalidArgument, "sample timestamps must not go backwards");
  s.workload_class = instance.workload_class;
  s.vcpu = instance.spec.vcpu;
  s.samples.push_back({at, centi});
  while (s.samples.size() > retention) s.samples.pop_front();
  ++s.total_ingested;
}

UtilizationReport Meter::report(SimTime window_start, SimTime window_end) const {
  UtilizationReport out{window_start, window_end, {}, {}};
  std::map<WorkloadClass, std::vector<std::pair<std::int64_t, int>>> by_class;
  for (const auto& [id, s] : series_) {
    std::vector<std::pair<std::int64_t, int>> rows;
    for (const auto& smp : s.samples)
      if (smp.at >= window_start && smp.at < window_end) rows.emplace_back(smp.centi, s.vcpu);
    if (rows.empty()) continue;
    auto& cls = by_class[s.workload_class];
    cls.insert(cls.end(), rows.begin(), rows.end());
    out.per_instance.push_back({id, s.workload_class, compute_stats(rows)});
  }
  for (const auto& [cls, rows] : by_class) out.per_class[cls] = compute_stats(rows);
  return out;
}

std::string report_csv(const UtilizationReport& report) {
  std::ostringstream os;
  os << "class,instance_id,mean_pct,p95_pct,samples\n";
  for (const auto& row : report.per_instance)
    os << enum_name(row.workload_class) << ',' << row.instance_id.value << ',' << format_centi(row.stats.mean_centi)
       << ',' << format_centi(row.stats.p95_centi) << ',' << row.stats.sample_count << '\n';
  for (const auto& [cls, st] : report.per_class)
    os << enum_name(cls) << ",ALL," << format_centi(st.mean_centi) << ',' << format_centi(st.p95_centi) << ','
       << st.sample_count << '\n';
  return os.str();
}

Json report_plot_json(const Meter& meter, SimTime window_start, SimTime window_end) {
  Json series = Json::array();
  for (const auto& [id, s] : meter.series()) {
    Json points = Json::array();
    for (const auto& smp : s.samples)
      if (smp.at >= window_start && smp.at < window_end)
        points.push_back(Json::array({to_ms(smp.at), static_cast<double>(smp.centi) / 100.0}));
    if (points.empty()) continue;
    series.push_back(Json{{"instance_id", id}, {"class", s.workload_class}, {"points", std::move(points)}});
  }
  return Json{{"window", {to_ms(window_start), to_ms(window_end)}}, {"series", std::move(series)}};
}

void to_json(Json& j, const Stats& s) {
  j = Json{{"samples", s.sample_count}, {"mean_pct", s.mean_pct()}, {"p95_pct", s.p95_pct()},
           {"mean_demand_vcpu", s.sample_count ? static_cast<double>(s.demand_sum) / 10000.0 / static_cast<double>(s.sample_count) : 0.0},
           {"p95_demand_vcpu", static_cast<double>(s.p95_demand) / 10000.0}};
}

void to_json(Json& j, const UtilizationReport& r) {
  Json per_class = Json::object();
  for (const auto& [cls, st] : r.per_class) per_class[std::string(enum_name(cls))] = st;
  Json rows = Json::array();
  for (const auto& row : r.per_instance)
    rows.push_back(Json{{"instance_id", row.instance_id}, {"class", row.workload_class}, {"stats", row.stats}});
  j = Json{{"window", {to_ms(r.window_start), to_ms(r.window_end)}}, {"per_class", std::move(per_class)}, {"per_instance", std::move(rows)}};
}

void to_json(Json& j, const Meter& m) {
  j = Json::array();
  for (const auto& [id, s] : m.series_) {
    Json samples = Json::array();
    for (const auto& smp : s.samples) samples.push_back(Json::array({to_ms(smp.at), smp.centi}));
    j.push_back(Json{{"instance_id", id}, {"class", s.workload_class}, {"vcpu", s.vcpu}, {"total", s.total_ingested}, {"samples", std::move(samples)}});
  }
}

void from_json(const Json& j, Meter& m) {
  m.series_.clear();
  for (const auto& e : j) {
    InstanceSeries s;
    e.at("instance_id").get_to(s.instance_id);
    e.at("class").get_to(s.workload_class);
    e.at("vcpu").get_to(s.vcpu);
    e.at("total").get_to(s.total_ingested);
    for (const auto& p : e.at("samples")) s.samples.push_back({sim_time_ms(p.at(0).get<std::int64_t>()), p.at(1).get<std::int64_t>()});
    m.series_.emplace(s.instance_id, std::move(s));
  }
}

}  // namespace deskcloud
