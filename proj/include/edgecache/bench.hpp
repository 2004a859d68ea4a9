#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "edgecache/neural.hpp"
#include "edgecache/pipeline.hpp"
#include "edgecache/scenario.hpp"
#include "edgecache/solver.hpp"
#include "edgecache/topology.hpp"

namespace edgecache {

/// Cached (flow, EC) pairs.
using PlacementSet = std::set<std::pair<int, int>>;

PlacementSet placement_set(const std::vector<int>& placement);

/// |X n Xhat| / |Xhat|. An empty candidate scores 1 against an empty optimum
/// and 0 otherwise.
double precision(const PlacementSet& optimal, const PlacementSet& candidate);

enum class Method { milp, cnn, gca };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct SampleResult {
  int flows = 0;
  int index = 0;
  Method method = Method::milp;
  SolveStatus status = SolveStatus::optimal;
  double seconds = 0.0;
  double total_cost = 0.0;  // penalty included
  bool feasible = false;
  int variables = 0;        // 0 when the method builds no model
  std::vector<int> placement;

  bool operator==(const SampleResult&) const = default;
};

struct MethodRow {
  int flows = 0;
  Method method = Method::milp;
  int samples = 0;
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  double mean_cost = 0.0;
  std::optional<double> precision;
  double feasible_ratio = 0.0;
  std::optional<double> max_cost_diff;
  std::optional<double> mean_variables;
  int timeouts = 0;
  /// Samples left out of precision and max diff because the reference timed out.
  int excluded = 0;

  bool operator==(const MethodRow&) const = default;
};

struct BenchReport {
  std::vector<MethodRow> rows;
  std::vector<SampleResult> samples;
  nlohmann::json metadata = nlohmann::json::object();

  const MethodRow* find(int flows, Method m) const;
  bool operator==(const BenchReport&) const = default;
};

struct BenchConfig {
  Topology topology;
  std::vector<int> flows{5, 10, 15, 20};
  int samples_per_k = 100;
  /// Fixed instances per flow count; when present they replace sampling.
  std::map<int, std::vector<Instance>> instances;
  const CnnBank* bank = nullptr;
  PipelineOptions pipeline;
  SolveLimits milp_limits;
  ScenarioParams params;
  std::uint64_t seed = 1;
  int threads = 1;
};

using BenchProgressFn = std::function<void(int flows, int done, int total)>;

/// Solves every sample with the full MILP, the CNN pipeline and the greedy
/// baseline, then aggregates one row per (flow count, method).
BenchReport run_benchmark(const BenchConfig& cfg, const BenchProgressFn& progress = {});

/// Aggregates per-sample results into rows (used by run_benchmark).
std::vector<MethodRow> aggregate(const std::vector<SampleResult>& samples);

std::string report_csv(const BenchReport& r);
nlohmann::json report_to_json(const BenchReport& r);
BenchReport report_from_json(const nlohmann::json& j);

/// Writes <stem>.csv and <stem>.json.
void emit_report(const BenchReport& r, const std::string& stem);

}  // namespace edgecache
