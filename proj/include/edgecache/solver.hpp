#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgecache/lp.hpp"
#include "edgecache/model.hpp"
#include "edgecache/scenario.hpp"
#include "edgecache/topology.hpp"

namespace edgecache {

enum class SolveStatus { optimal, timeout_incumbent, infeasible };

std::string_view to_string(SolveStatus s);

struct SolveStats {
  long nodes = 0;
  long lp_iterations = 0;
  double wall_time_s = 0.0;
};

struct SolveLimits {
  double time_limit_s = 300.0;
  long node_limit = 10'000'000;
};

/// One explored branch-and-bound node, recorded on request.
struct NodeTrace {
  long id = 0;
  long parent = -1;
  double parent_bound = 0.0;
  double bound = 0.0;
};

/// Binary decisions use the model layouts: x [k*|E|+e], y [k*|L|+l],
/// z [(k*|A|+a)*|E|+e].
struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  bool has_solution = false;
  Dimensions dims;
  std::vector<std::uint8_t> x;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> z;
  std::vector<double> t;
  std::vector<double> chi;
  std::vector<double> values;  // full model vector
  double objective = 0.0;
  SolveStats stats;
  std::vector<NodeTrace> trace;

  /// Cached EC per flow, -1 when uncached.
  std::vector<int> placement() const;
};

struct BnbOptions {
  SolveLimits limits;
  /// Full model vector used as the first incumbent when feasible.
  std::optional<std::vector<double>> warm_start;
  bool record_trace = false;
  /// Solve once with every binary at its lower bound before branching.
  bool zero_heuristic = true;
};

/// Branch-and-bound over the binaries with dual-simplex bounds: best-bound
/// node selection with a depth-first dive after every branching.
/// Branches on the most fractional x, then z, then y variable.
Solution solve_bnb(const MilpModel& m, const BnbOptions& opts = {});

struct VarBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

VarBounds model_bounds(const MilpModel& m);

struct LpRelaxation {
  lp::Status status = lp::Status::numerical;
  double objective = 0.0;  // includes the model constant
  std::vector<double> values;
  long iterations = 0;
};

/// Binaries relaxed to [0,1] intersected with `bounds`.
LpRelaxation solve_lp_relaxation(const MilpModel& m, const VarBounds& bounds);

/// Exhaustive search over placements and hit/miss routings.
/// Throws Error(instance_too_large) when (|E|+1)^|K| * 2^(|K||A|) > cap.
Solution enumerate_optimal(const Instance& inst, const PathTables& pt, double cap = 1e6,
                           const ModelOptions& opts = {});

struct PenaltyConfig {
  /// Cost added per violated constraint row; defaults to beta * N^T * |K|.
  std::optional<double> per_violation;
  double resolve(const Instance& inst) const;
};

struct Violation {
  RowFamily family = RowFamily::one_host;
  int flow = -1;
  int router = -1;
  int cloud = -1;
  int link = -1;

  std::string describe() const;
};

struct EvaluatedSolution : Solution {
  std::vector<double> utilization;  // U_e
  double hosting_cost = 0.0;        // C^C
  double transmission_cost = 0.0;   // C^T
  std::vector<Violation> violations;
  /// ECs whose utilization reached 1; their hosting cost is not computable.
  std::vector<int> overloaded;
  double penalty = 0.0;
  double total_with_penalty = 0.0;

  bool feasible() const { return violations.empty(); }
};

/// Direct evaluation of a placement x and routing z against the original
/// fractional cost and every constraint; y is derived from z.
EvaluatedSolution evaluate_assignment(const Instance& inst, const PathTables& pt,
                                      const std::vector<std::uint8_t>& x,
                                      const std::vector<std::uint8_t>& z,
                                      const PenaltyConfig& penalty = {}, double epsilon_cap = 0.01);

/// Evaluates a solver result, keeping its status and statistics.
EvaluatedSolution evaluate_solution(const Instance& inst, const PathTables& pt, const Solution& s,
                                    const PenaltyConfig& penalty = {}, double epsilon_cap = 0.01);

/// x matrix for a placement vector.
std::vector<std::uint8_t> placement_matrix(const std::vector<int>& placement, int edge_clouds);

nlohmann::json solution_to_json(const Solution& s);
nlohmann::json evaluated_to_json(const EvaluatedSolution& s);

}  // namespace edgecache
