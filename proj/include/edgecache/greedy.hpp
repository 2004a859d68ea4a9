#pragma once

#include <vector>

#include "edgecache/model.hpp"
#include "edgecache/solver.hpp"

namespace edgecache {

/// Greedy caching baseline. Flows are taken in index order; each goes to the
/// EC with the smallest expected hop count sum_a p_ka N_ae among those whose
/// residual storage (with the capacity slack applied) still fits it, ties to
/// the lowest EC index. The chosen EC serves every access router. Link
/// overloads are left for the evaluator to penalize.
EvaluatedSolution gca(const Instance& inst, const PathTables& pt, const PenaltyConfig& penalty = {},
                      double epsilon_cap = 0.01);

/// Feasible full model vector for a placement. Flows whose EC is eliminated
/// or no longer fits stay uncached; hits are enabled router by router in
/// decreasing p_ka while every link on the path keeps capacity.
std::vector<double> placement_warm_start(const MilpModel& m, const Instance& inst, const PathTables& pt,
                                         const std::vector<int>& placement);

/// The greedy placement over the ECs the model still allows, completed by
/// placement_warm_start.
std::vector<double> gca_warm_start(const MilpModel& m, const Instance& inst, const PathTables& pt);

}  // namespace edgecache
