#include <algorithm>
#include <numeric>

#include "doctest.h"

#include "deskcloud/core/error.hpp"
#include "deskcloud/metering/load_profile.hpp"
#include "deskcloud/metering/metering.hpp"
#include "support/gen.hpp"

using namespace deskcloud;

namespace {

Instance started(const std::string& id, WorkloadClass cls, int vcpu) {
  Instance i;
  i.id = Id{id};
  i.workload_class = cls;
  i.spec.vcpu = vcpu;
  i.state = LifecycleState::Running;
  i.ever_started = true;
  return i;
}

Stats stats_of(const std::vector<std::int64_t>& centi, int vcpu) {
  std::vector<std::pair<std::int64_t, int>> rows;
  for (auto c : centi) rows.emplace_back(c, vcpu);
  return compute_stats(rows);
}

}  // namespace

TEST_SUITE("metering") {
  TEST_CASE("quantization and formatting") {
    CHECK(quantize_pct(12.345) == 1235);  // llround of 1234.5 up to 1235
    CHECK(quantize_pct(0.0) == 0);
    CHECK(quantize_pct(100.0) == 10000);
    CHECK_THROWS_AS(quantize_pct(100.01), Error);
    CHECK_THROWS_AS(quantize_pct(-1), Error);
    CHECK(format_centi(1205) == "12.05");
    CHECK(format_centi(7) == "0.07");
    CHECK(format_centi(-150) == "-1.50");
  }

  TEST_CASE("round half to even") {
    CHECK(div_round_half_even(5, 2) == 2);
    CHECK(div_round_half_even(7, 2) == 4);
    CHECK(div_round_half_even(-5, 2) == -2);
    CHECK(div_round_half_even(10, 4) == 2);
    CHECK(div_round_half_even(11, 4) == 3);
    CHECK(div_round_half_even(0, 3) == 0);
    testing::Gen g(1);
    for (int i = 0; i < 5000; ++i) {
      const std::int64_t num = g.range(-100000, 100000), den = g.range(1, 1000);
      const long double exact = static_cast<long double>(num) / static_cast<long double>(den);
      const std::int64_t got = div_round_half_even(num, den);
      CHECK(std::fabs(static_cast<double>(exact - static_cast<long double>(got))) <= 0.5);
      if (2 * (num - got * den) == den || 2 * (num - got * den) == -den) CHECK(got % 2 == 0);
    }
  }

  TEST_CASE("nearest rank agrees with a sorted oracle") {
    CHECK(nearest_rank({}, 95) == 0);
    CHECK(nearest_rank({5}, 95) == 5);
    std::vector<std::int64_t> hundred(100);
    std::iota(hundred.begin(), hundred.end(), 1);
    CHECK(nearest_rank(hundred, 95) == 95);
    CHECK(nearest_rank(hundred, 100) == 100);
    CHECK(nearest_rank(hundred, 1) == 1);
    testing::Gen g(2);
    for (int i = 0; i < 500; ++i) {
      std::vector<std::int64_t> v(static_cast<std::size_t>(g.irange(1, 300)));
      for (auto& x : v) x = g.range(0, 10000);
      const int p = g.irange(1, 100);
      std::vector<std::int64_t> sorted = v;
      std::sort(sorted.begin(), sorted.end());
      std::size_t rank = 1;
      while (rank * 100 < static_cast<std::size_t>(p) * v.size()) ++rank;
      CHECK(nearest_rank(v, p) == sorted[rank - 1]);
    }
  }

  TEST_CASE("recommendations") {
    MeteringPolicy pol;
    pol.min_samples = 10;
    std::vector<std::int64_t> idle(20, 300);  // 3% on 2 vcpus = 0.06 vcpu
    CHECK(recommend_vcpu(stats_of(idle, 2), WorkloadClass::development, pol) == 1);
    std::vector<std::int64_t> busy(20, 9000);  // 90% on 4 vcpus = 3.6 vcpu
    CHECK(recommend_vcpu(stats_of(busy, 4), WorkloadClass::development, pol) == 4);
    CHECK(recommend_vcpu(stats_of(idle, 2), WorkloadClass::service, pol) == 2);
    CHECK(recommend_vcpu(stats_of(busy, 4), WorkloadClass::service, pol) == 4);
    std::vector<std::int64_t> few(5, 100);
    try {
      (void)recommend_vcpu(stats_of(few, 1), WorkloadClass::development, pol);
      FAIL("expected InsufficientData");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientData);
    }
  }

  TEST_CASE("meter windows are half-open and retention trims oldest") {
    Meter m;
    const Instance i = started("I", WorkloadClass::service, 2);
    for (int t = 0; t < 10; ++t) m.ingest(i, sim_time_ms(t * 1000), t * 10.0, 5);
    CHECK(m.series().at(Id{"I"}).samples.size() == 5);
    CHECK(m.series().at(Id{"I"}).total_ingested == 10);
    const auto r = m.report(sim_time_ms(5000), sim_time_ms(8000));
    REQUIRE(r.per_instance.size() == 1);
    CHECK(r.per_instance[0].stats.sample_count == 3);
    CHECK(r.per_instance[0].stats.mean_centi == 6000);
    CHECK(m.report(sim_time_ms(0), sim_time_ms(5000)).empty());
    CHECK_THROWS_AS(m.ingest(i, sim_time_ms(0), 1.0, 5), Error);
    Instance never = started("N", WorkloadClass::service, 1);
    never.ever_started = false;
    CHECK_THROWS_AS(m.ingest(never, sim_time_ms(20000), 1.0, 5), Error);
  }

  TEST_CASE("csv and plot output") {
    Meter m;
    m.ingest(started("I", WorkloadClass::development, 1), sim_time_ms(0), 2.5, 10);
    m.ingest(started("I", WorkloadClass::development, 1), sim_time_ms(10), 3.5, 10);
    const auto r = m.report(sim_time_ms(0), sim_time_ms(100));
    CHECK(report_csv(r) == "class,instance_id,mean_pct,p95_pct,samples\n"
                           "development,I,3.00,3.50,2\n"
                           "development,ALL,3.00,3.50,2\n");
    const Json plot = report_plot_json(m, sim_time_ms(0), sim_time_ms(5));
    CHECK(plot.at("series").size() == 1);
    CHECK(plot.at("series")[0].at("points").size() == 1);
  }

  TEST_CASE("load profiles separate service from development and are seeded") {
    LoadProfile s(WorkloadClass::service, 9), d(WorkloadClass::development, 9), d2(WorkloadClass::development, 9);
    double ss = 0, ds = 0;
    for (int k = 0; k < 2000; ++k) {
      const double a = s.next_pct(), b = d.next_pct();
      CHECK(a >= 0.0);
      CHECK(a <= 100.0);
      CHECK(b == d2.next_pct());
      ss += a;
      ds += b;
    }
    CHECK(ss > ds * 2);
    LoadProfile burst(WorkloadClass::development, 4);
    burst.burst(50.0, 3);
    for (int k = 0; k < 3; ++k) CHECK(burst.next_pct() <= 100.0);
  }
}
