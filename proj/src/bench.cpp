#include "edgecache/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "edgecache/error.hpp"
#include "edgecache/greedy.hpp"
#include "edgecache/parallel.hpp"

namespace edgecache {

namespace {

constexpr int kReportVersion = 1;
constexpr Method kMethods[] = {Method::milp, Method::cnn, Method::gca};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

// FNV-1a, stable across platforms.
std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SolveStatus status_from_string(const std::string& s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "timeout-incumbent") return SolveStatus::timeout_incumbent;
  if (s == "infeasible") return SolveStatus::infeasible;
  throw Error(ErrorCode::malformed_file, "unknown status " + s);
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

SampleResult from_evaluated(const EvaluatedSolution& s, int flows, int index, Method m, double seconds,
                            int variables) {
  SampleResult r;
  r.flows = flows;
  r.index = index;
  r.method = m;
  r.status = s.status;
  r.seconds = seconds;
  r.total_cost = s.total_with_penalty;
  r.feasible = s.feasible();
  r.variables = variables;
  r.placement = s.placement();
  return r;
}

std::vector<Instance> bench_instances(const BenchConfig& cfg, int flows) {
  if (auto it = cfg.instances.find(flows); it != cfg.instances.end()) return it->second;
  std::vector<Instance> out;
  for (int i = 0; i < cfg.samples_per_k; ++i)
    out.push_back(sample_instance(cfg.topology, cfg.params, flows,
                                  derive_seed(cfg.seed, static_cast<std::uint64_t>(flows), static_cast<std::uint64_t>(i))));
  return out;
}

}  // namespace

PlacementSet placement_set(const std::vector<int>& placement) {
  PlacementSet s;
  for (int k = 0; k < static_cast<int>(placement.size()); ++k)
    if (placement[k] >= 0) s.emplace(k, placement[k]);
  return s;
}

double precision(const PlacementSet& optimal, const PlacementSet& candidate) {
  if (candidate.empty()) return optimal.empty() ? 1.0 : 0.0;
  std::size_t hits = 0;
  for (const auto& p : candidate) hits += optimal.count(p);
  return static_cast<double>(hits) / static_cast<double>(candidate.size());
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::milp: return "MILP";
    case Method::cnn: return "CNN";
    case Method::gca: return "GCA";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "MILP" || s == "milp") return Method::milp;
  if (s == "CNN" || s == "cnn") return Method::cnn;
  if (s == "GCA" || s == "gca") return Method::gca;
  throw Error(ErrorCode::invalid_argument, "unknown method " + std::string(s));
}

const MethodRow* BenchReport::find(int flows, Method m) const {
  for (const auto& r : rows)
    if (r.flows == flows && r.method == m) return &r;
  return nullptr;
}

std::vector<MethodRow> aggregate(const std::vector<SampleResult>& samples) {
  std::vector<int> flow_counts;
  for (const auto& s : samples) flow_counts.push_back(s.flows);
  std::sort(flow_counts.begin(), flow_counts.end());
  flow_counts.erase(std::unique(flow_counts.begin(), flow_counts.end()), flow_counts.end());

  std::vector<MethodRow> rows;
  for (int flows : flow_counts) {
    std::map<int, const SampleResult*> reference;
    for (const auto& s : samples)
      if (s.flows == flows && s.method == Method::milp) reference[s.index] = &s;
    for (Method method : kMethods) {
      MethodRow row;
      row.flows = flows;
      row.method = method;
      std::vector<double> times;
      double cost = 0.0, variables = 0.0, prec = 0.0;
      int feasible = 0, compared = 0, modeled = 0;
      for (const auto& s : samples) {
        if (s.flows != flows || s.method != method) continue;
        ++row.samples;
        times.push_back(s.seconds);
        cost += s.total_cost;
        feasible += s.feasible ? 1 : 0;
        row.timeouts += s.status == SolveStatus::timeout_incumbent ? 1 : 0;
        if (s.variables > 0) {
          variables += s.variables;
          ++modeled;
        }
        const auto it = reference.find(s.index);
        if (it == reference.end() || it->second->status != SolveStatus::optimal) {
          ++row.excluded;
          continue;
        }
        ++compared;
        prec += precision(placement_set(it->second->placement), placement_set(s.placement));
        if (method != Method::milp) {
          const double diff = s.total_cost - it->second->total_cost;
          row.max_cost_diff = row.max_cost_diff ? std::max(*row.max_cost_diff, diff) : diff;
        }
      }
      if (row.samples == 0) continue;
      row.mean_seconds = std::accumulate(times.begin(), times.end(), 0.0) / row.samples;
      row.median_seconds = median(times);
      row.mean_cost = cost / row.samples;
      row.feasible_ratio = static_cast<double>(feasible) / row.samples;
      if (compared > 0) row.precision = prec / compared;
      if (modeled > 0) row.mean_variables = variables / modeled;
      rows.push_back(row);
    }
  }
  return rows;
}

BenchReport run_benchmark(const BenchConfig& cfg, const BenchProgressFn& progress) {
  if (!cfg.bank || cfg.bank->models.empty()) throw Error(ErrorCode::missing_bank, "benchmark needs a trained bank");
  const auto pt = shortest_paths(cfg.topology);
  BenchReport report;
  for (int flows : cfg.flows) {
    const auto instances = bench_instances(cfg, flows);
    const int n = static_cast<int>(instances.size());
    std::vector<std::array<SampleResult, 3>> results(n);
    std::atomic<int> done{0};
    parallel_for(n, cfg.threads, [&](int i) {
      const auto& inst = instances[i];
      if (inst.num_flows() != flows) throw Error(ErrorCode::dimension_mismatch, "instance flow count differs");

      auto start = Clock::now();
      const auto model = build_milp(inst, pt, cfg.pipeline.model);
      BnbOptions bnb;
      bnb.limits = cfg.milp_limits;
      bnb.warm_start = gca_warm_start(model, inst, pt);
      const auto exact = solve_bnb(model, bnb);
      if (!exact.has_solution) throw Error(ErrorCode::solver_budget_exhausted, "reference solve found no assignment");
      const auto exact_eval = evaluate_solution(inst, pt, exact, cfg.pipeline.penalty, model.epsilon_cap);
      results[i][0] = from_evaluated(exact_eval, flows, i, Method::milp, elapsed(start), count_variables(model).total);

      const auto cnn = solve_with_cnn(inst, pt, *cfg.bank, cfg.pipeline);
      results[i][1] = from_evaluated(cnn.solution, flows, i, Method::cnn, cnn.total_s, cnn.reduced_variables);

      start = Clock::now();
      const auto greedy = gca(inst, pt, cfg.pipeline.penalty, cfg.pipeline.model.epsilon_cap);
      results[i][2] = from_evaluated(greedy, flows, i, Method::gca, elapsed(start), 0);
      results[i][2].status = SolveStatus::optimal;
      if (progress) progress(flows, ++done, n);
    });
    for (auto& r : results)
      for (auto& s : r) report.samples.push_back(std::move(s));
  }
  report.rows = aggregate(report.samples);

  nlohmann::json config = {
      {"flows", cfg.flows},
      {"samples_per_k", cfg.samples_per_k},
      {"fixed_instances", [&] {
         nlohmann::json j = nlohmann::json::object();
         for (const auto& [k, v] : cfg.instances) j[std::to_string(k)] = v.size();
         return j;
       }()},
      {"seed", cfg.seed},
      {"topology_seed", cfg.topology.seed},
      {"delta", cfg.pipeline.infer.delta},
      {"o_mode", std::string(to_string(cfg.pipeline.infer.o_mode))},
      {"milp_time_limit_s", cfg.milp_limits.time_limit_s},
      {"milp_node_limit", cfg.milp_limits.node_limit},
      {"cnn_time_limit_s", cfg.pipeline.limits.time_limit_s},
      {"cnn_node_limit", cfg.pipeline.limits.node_limit},
      {"epsilon_cap", cfg.pipeline.model.epsilon_cap},
      {"strengthen", cfg.pipeline.model.strengthen},
      {"scenario", scenario_params_to_json(cfg.params)},
      {"bank_seed", cfg.bank->seed},
      {"bank_epoch", cfg.bank->epoch},
  };
  report.metadata = {
      {"config", config},
      {"config_hash", fingerprint(config.dump())},
      {"penalty", cfg.pipeline.penalty.per_violation ? nlohmann::json(*cfg.pipeline.penalty.per_violation)
                                                     : nlohmann::json("beta * N^T * |K| per violated row")},
      {"cost_includes_penalty", true},
      {"weights", cfg.params.sample_weights ? "sampled" : "fixed"},
      {"timing", cfg.threads > 1 ? "concurrent" : "serial"},
  };
  return report;
}

std::string report_csv(const BenchReport& r) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "flows,method,samples,mean_time_s,median_time_s,mean_tc,precision,feasible_ratio,max_tc_diff,"
         "mean_variables,timeouts,excluded\n";
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const auto& row : r.rows) {
    out << row.flows << ',' << to_string(row.method) << ',' << row.samples << ',' << row.mean_seconds << ','
        << row.median_seconds << ',' << row.mean_cost << ',';
    opt(row.precision);
    out << ',' << row.feasible_ratio << ',';
    opt(row.max_cost_diff);
    out << ',';
    opt(row.mean_variables);
    out << ',' << row.timeouts << ',' << row.excluded << '\n';
  }
  return out.str();
}

nlohmann::json report_to_json(const BenchReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"flows", row.flows},
                    {"method", std::string(to_string(row.method))},
                    {"samples", row.samples},
                    {"mean_time_s", row.mean_seconds},
                    {"median_time_s", row.median_seconds},
                    {"mean_tc", row.mean_cost},
                    {"precision", optional_json(row.precision)},
                    {"feasible_ratio", row.feasible_ratio},
                    {"max_tc_diff", optional_json(row.max_cost_diff)},
                    {"mean_variables", optional_json(row.mean_variables)},
                    {"timeouts", row.timeouts},
                    {"excluded", row.excluded}});
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples)
    samples.push_back({{"flows", s.flows},
                       {"index", s.index},
                       {"method", std::string(to_string(s.method))},
                       {"status", std::string(to_string(s.status))},
                       {"time_s", s.seconds},
                       {"tc", s.total_cost},
                       {"feasible", s.feasible},
                       {"variables", s.variables},
                       {"placement", s.placement}});
  return {{"format", "edgecache.bench"},
          {"version", kReportVersion},
          {"metadata", r.metadata},
          {"rows", rows},
          {"samples", samples}};
}

BenchReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "edgecache.bench")
      throw Error(ErrorCode::malformed_file, "not a benchmark report");
    if (j.at("version").get<int>() != kReportVersion)
      throw Error(ErrorCode::version_mismatch, "report version " + j.at("version").dump());
    BenchReport r;
    r.metadata = j.at("metadata");
    for (const auto& row : j.at("rows")) {
      MethodRow m;
      m.flows = row.at("flows").get<int>();
      m.method = method_from_string(row.at("method").get<std::string>());
      m.samples = row.at("samples").get<int>();
      m.mean_seconds = row.at("mean_time_s").get<double>();
      m.median_seconds = row.at("median_time_s").get<double>();
      m.mean_cost = row.at("mean_tc").get<double>();
      m.precision = optional_from(row.at("precision"));
      m.feasible_ratio = row.at("feasible_ratio").get<double>();
      m.max_cost_diff = optional_from(row.at("max_tc_diff"));
      m.mean_variables = optional_from(row.at("mean_variables"));
      m.timeouts = row.at("timeouts").get<int>();
      m.excluded = row.at("excluded").get<int>();
      r.rows.push_back(m);
    }
    for (const auto& s : j.at("samples")) {
      SampleResult x;
      x.flows = s.at("flows").get<int>();
      x.index = s.at("index").get<int>();
      x.method = method_from_string(s.at("method").get<std::string>());
      x.status = status_from_string(s.at("status").get<std::string>());
      x.seconds = s.at("time_s").get<double>();
      x.total_cost = s.at("tc").get<double>();
      x.feasible = s.at("feasible").get<bool>();
      x.variables = s.at("variables").get<int>();
      x.placement = s.at("placement").get<std::vector<int>>();
      r.samples.push_back(std::move(x));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_file, std::string("benchmark report: ") + e.what());
  }
}

void emit_report(const BenchReport& r, const std::string& stem) {
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::io_failure, "failed writing " + path);
  };
  write(stem + ".csv", report_csv(r));
  write(stem + ".json", report_to_json(r).dump(2) + "\n");
}

}  // namespace edgecache
