#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "edgecache/bench.hpp"
#include "support.hpp"

using namespace edgecache;
using fixture::code_of;

namespace {

SampleResult sample(int flows, int index, Method m, double cost, std::vector<int> placement,
                    SolveStatus status = SolveStatus::optimal, bool feasible = true) {
  SampleResult s;
  s.flows = flows;
  s.index = index;
  s.method = m;
  s.status = status;
  s.seconds = 0.1 * (index + 1);
  s.total_cost = cost;
  s.feasible = feasible;
  s.variables = m == Method::gca ? 0 : 10 + index;
  s.placement = std::move(placement);
  return s;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("precision examples") {
    const PlacementSet x{{1, 1}, {2, 3}};
    CHECK(precision(x, x) == 1.0);
    const PlacementSet five{{0, 0}, {1, 1}, {2, 3}, {3, 2}, {4, 5}};
    const PlacementSet four{{0, 0}, {1, 1}, {2, 3}, {3, 2}};
    CHECK(precision(four, five) == doctest::Approx(0.8));
    CHECK(precision({}, {}) == 1.0);
    CHECK(precision(x, {}) == 0.0);
    CHECK(precision({}, x) == 0.0);
    CHECK(placement_set({2, -1, 0}) == PlacementSet{{0, 2}, {2, 0}});
  }

  TEST_CASE("aggregation") {
    std::vector<SampleResult> samples{
        sample(5, 0, Method::milp, 10.0, {0, 1}),
        sample(5, 1, Method::milp, 20.0, {0, -1}),
        sample(5, 0, Method::cnn, 10.0, {0, 1}),
        sample(5, 1, Method::cnn, 21.0, {1, -1}),
        sample(5, 0, Method::gca, 30.0, {0, 2}, SolveStatus::optimal, false),
        sample(5, 1, Method::gca, 22.0, {0, 0}),
    };
    const auto rows = aggregate(samples);
    REQUIRE(rows.size() == 3);
    const auto& milp = rows[0];
    CHECK(milp.method == Method::milp);
    CHECK(milp.samples == 2);
    CHECK(milp.mean_cost == doctest::Approx(15.0));
    CHECK(milp.precision == 1.0);
    CHECK_FALSE(milp.max_cost_diff.has_value());
    CHECK(milp.mean_variables == doctest::Approx(10.5));
    CHECK(milp.median_seconds == doctest::Approx(0.15));
    const auto& cnn = rows[1];
    CHECK(cnn.precision == doctest::Approx(0.5));
    CHECK(cnn.max_cost_diff == doctest::Approx(1.0));
    CHECK(cnn.feasible_ratio == 1.0);
    const auto& gca = rows[2];
    CHECK(gca.precision == doctest::Approx((0.5 + 0.5) / 2));
    CHECK(gca.feasible_ratio == 0.5);
    CHECK(gca.max_cost_diff == doctest::Approx(20.0));
    CHECK_FALSE(gca.mean_variables.has_value());
  }

  TEST_CASE("timed-out references are excluded from comparisons") {
    std::vector<SampleResult> samples{
        sample(10, 0, Method::milp, 10.0, {0}, SolveStatus::timeout_incumbent),
        sample(10, 1, Method::milp, 12.0, {1}),
        sample(10, 0, Method::cnn, 9.0, {1}),
        sample(10, 1, Method::cnn, 13.0, {0}),
    };
    const auto rows = aggregate(samples);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].timeouts == 1);
    CHECK(rows[0].excluded == 1);
    CHECK(rows[1].excluded == 1);
    CHECK(rows[1].max_cost_diff == doctest::Approx(1.0));
    CHECK(rows[1].precision == 0.0);
    CHECK(rows[1].mean_cost == doctest::Approx(11.0));
  }

  TEST_CASE("csv layout") {
    BenchReport empty;
    const auto header = lines(report_csv(empty));
    REQUIRE(header.size() == 1);
    CHECK(header[0] ==
          "flows,method,samples,mean_time_s,median_time_s,mean_tc,precision,feasible_ratio,max_tc_diff,"
          "mean_variables,timeouts,excluded");

    std::vector<SampleResult> samples;
    for (int flows : {5, 10, 15, 20})
      for (Method m : {Method::milp, Method::cnn, Method::gca}) samples.push_back(sample(flows, 0, m, 1.0, {0}));
    BenchReport r;
    r.samples = samples;
    r.rows = aggregate(samples);
    const auto table = lines(report_csv(r));
    CHECK(table.size() == 13);
    CHECK(table[1].rfind("5,MILP,1,", 0) == 0);
    CHECK(table[12].rfind("20,GCA,1,", 0) == 0);
  }

  TEST_CASE("json round trip and file output") {
    std::vector<SampleResult> samples{sample(5, 0, Method::milp, 10.0, {0, 1}), sample(5, 0, Method::cnn, 10.5, {0, -1}),
                                      sample(5, 0, Method::gca, 11.0, {1, 1}, SolveStatus::optimal, false)};
    BenchReport r;
    r.samples = samples;
    r.rows = aggregate(samples);
    r.metadata = {{"seed", 3}, {"note", "unit"}};
    CHECK(report_from_json(report_to_json(r)) == r);
    CHECK(report_from_json(report_to_json(BenchReport{})) == BenchReport{});

    auto j = report_to_json(r);
    j["version"] = 99;
    CHECK(code_of([&] { report_from_json(j); }) == ErrorCode::version_mismatch);
    j = report_to_json(r);
    j["format"] = "other";
    CHECK(code_of([&] { report_from_json(j); }) == ErrorCode::malformed_file);

    const auto stem = (std::filesystem::temp_directory_path() / "edgecache_bench_test").string();
    emit_report(r, stem);
    std::ifstream csv(stem + ".csv");
    std::stringstream text;
    text << csv.rdbuf();
    CHECK(text.str() == report_csv(r));
    std::filesystem::remove(stem + ".csv");
    std::filesystem::remove(stem + ".json");
    CHECK(code_of([&] { emit_report(r, "/nonexistent-dir/x"); }) == ErrorCode::io_failure);
  }

  TEST_CASE("small benchmark run") {
    Architecture arch;
    arch.conv_maps = {4};
    arch.hidden = {16};
    const auto bank = init_bank(arch, 5, 6, 2);
    BenchConfig cfg;
    cfg.topology = fixture::reference_topology();
    cfg.flows = {5, 10};
    cfg.samples_per_k = 3;
    cfg.bank = &bank;
    cfg.milp_limits.time_limit_s = 2.0;
    cfg.pipeline.limits.time_limit_s = 2.0;
    const auto r = run_benchmark(cfg);
    CHECK(r.samples.size() == 18);
    REQUIRE(r.rows.size() == 6);
    for (int flows : {5, 10}) {
      const auto* milp = r.find(flows, Method::milp);
      const auto* cnn = r.find(flows, Method::cnn);
      const auto* gca = r.find(flows, Method::gca);
      REQUIRE(milp);
      REQUIRE(cnn);
      REQUIRE(gca);
      CHECK(milp->mean_variables == (flows == 5 ? 376.0 : 746.0));
      CHECK(milp->feasible_ratio == 1.0);
      CHECK_FALSE(milp->max_cost_diff.has_value());
      if (milp->excluded == 0) CHECK(milp->precision == 1.0);
      CHECK(cnn->feasible_ratio == 1.0);
      CHECK_FALSE(gca->mean_variables.has_value());
      if (milp->timeouts == 0) CHECK(milp->mean_cost <= cnn->mean_cost + 1e-9);
    }
    CHECK(r.metadata.contains("config_hash"));
    CHECK(r.metadata.contains("penalty"));

    // Same seed, same instances and answers.
    const auto again = run_benchmark(cfg);
    for (std::size_t i = 0; i < r.samples.size(); ++i)
      if (r.samples[i].status == SolveStatus::optimal) CHECK(again.samples[i].total_cost == r.samples[i].total_cost);

    cfg.bank = nullptr;
    CHECK(code_of([&] { run_benchmark(cfg); }) == ErrorCode::missing_bank);
  }
}
