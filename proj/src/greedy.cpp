#include "edgecache/greedy.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "edgecache/error.hpp"

namespace edgecache {

namespace {

std::vector<int> greedy_placement(const Instance& inst, const PathTables& pt, double epsilon_cap,
                                  const MilpModel* allowed) {
  const int K = inst.num_flows(), A = inst.num_access_routers, E = inst.num_edge_clouds;
  std::vector<double> residual(E);
  for (int e = 0; e < E; ++e) residual[e] = (1.0 - epsilon_cap) * inst.ec_capacity[e];
  std::vector<int> placement(K, -1);
  for (int k = 0; k < K; ++k) {
    const auto& flow = inst.flows[k];
    double best = std::numeric_limits<double>::infinity();
    for (int e = 0; e < E; ++e) {
      if (residual[e] < flow.storage) continue;
      if (allowed && allowed->vars[allowed->x(k, e)].eliminated) continue;
      double expected = 0.0;
      for (int a = 0; a < A; ++a) expected += flow.mobility[a] * pt.hop(a, e);
      if (expected < best) {
        best = expected;
        placement[k] = e;
      }
    }
    if (placement[k] >= 0) residual[placement[k]] -= flow.storage;
  }
  return placement;
}

}  // namespace

EvaluatedSolution gca(const Instance& inst, const PathTables& pt, const PenaltyConfig& penalty,
                      double epsilon_cap) {
  const int K = inst.num_flows(), A = inst.num_access_routers, E = inst.num_edge_clouds;
  const auto placement = greedy_placement(inst, pt, epsilon_cap, nullptr);
  std::vector<std::uint8_t> x(static_cast<std::size_t>(K) * E, 0);
  std::vector<std::uint8_t> z(static_cast<std::size_t>(K) * A * E, 0);
  for (int k = 0; k < K; ++k) {
    const int e = placement[k];
    if (e < 0) continue;
    x[k * E + e] = 1;
    for (int a = 0; a < A; ++a) z[(k * A + a) * E + e] = 1;
  }
  return evaluate_assignment(inst, pt, x, z, penalty, epsilon_cap);
}

std::vector<double> placement_warm_start(const MilpModel& m, const Instance& inst, const PathTables& pt,
                                         const std::vector<int>& placement) {
  const int K = m.dims.flows, A = m.dims.access_routers, E = m.dims.edge_clouds, L = m.dims.links;
  if (static_cast<int>(placement.size()) != K)
    throw Error(ErrorCode::dimension_mismatch, "placement does not match model");
  std::vector<double> residual(E);
  for (int e = 0; e < E; ++e) residual[e] = (1.0 - m.epsilon_cap) * inst.ec_capacity[e];
  std::vector<double> load(L, 0.0);
  std::vector<std::uint8_t> x(static_cast<std::size_t>(K) * E, 0);
  std::vector<std::uint8_t> z(static_cast<std::size_t>(K) * A * E, 0);
  std::vector<int> routers(A);
  for (int k = 0; k < K; ++k) {
    const int e = placement[k];
    if (e < 0 || e >= E || m.vars[m.x(k, e)].eliminated || residual[e] < inst.flows[k].storage) continue;
    residual[e] -= inst.flows[k].storage;
    x[k * E + e] = 1;
    const auto& p = inst.flows[k].mobility;
    std::iota(routers.begin(), routers.end(), 0);
    std::stable_sort(routers.begin(), routers.end(), [&](int a, int b) { return p[a] > p[b]; });
    std::vector<std::uint8_t> used(L, 0);
    for (int a : routers) {
      if (pt.hop(a, e) >= inst.hops_to_datacenter) continue;
      bool fits = true;
      for (int l = 0; l < L && fits; ++l)
        if (pt.on_path(l, a, e) && !used[l]) fits = load[l] + inst.flows[k].bandwidth <= inst.link_capacity[l];
      if (!fits) continue;
      z[(k * A + a) * E + e] = 1;
      for (int l = 0; l < L; ++l)
        if (pt.on_path(l, a, e) && !used[l]) {
          used[l] = 1;
          load[l] += inst.flows[k].bandwidth;
        }
    }
  }
  return complete_assignment(m, inst, pt, x, z);
}

std::vector<double> gca_warm_start(const MilpModel& m, const Instance& inst, const PathTables& pt) {
  return placement_warm_start(m, inst, pt, greedy_placement(inst, pt, m.epsilon_cap, &m));
}

}  // namespace edgecache
