#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "edgecache/scenario.hpp"
#include "edgecache/topology.hpp"

namespace fixture {

using namespace edgecache;

/// Path graph 0 - 1 - ... - (n-1); link i joins i and i+1.
inline Topology line(int nodes, std::vector<int> ars, std::vector<int> ecs) {
  Topology t;
  t.node_count = nodes;
  for (int i = 0; i + 1 < nodes; ++i) t.links.push_back({i, i, i + 1});
  t.access_routers = std::move(ars);
  t.edge_clouds = std::move(ecs);
  return t;
}

/// Random connected graph: random tree plus `extra` chords.
inline Topology random_graph(std::mt19937_64& rng, int nodes, int extra, int ars, int ecs) {
  Topology t;
  t.node_count = nodes;
  std::set<std::pair<int, int>> edges;
  for (int v = 1; v < nodes; ++v) {
    const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
    edges.emplace(u, v);
  }
  std::uniform_int_distribution<int> pick(0, nodes - 1);
  for (int tries = 0; tries < 100 && extra > 0; ++tries) {
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (edges.emplace(u, v).second) --extra;
  }
  int id = 0;
  for (auto [u, v] : edges) t.links.push_back({id++, u, v});
  std::vector<int> order(nodes);
  for (int i = 0; i < nodes; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  t.access_routers.assign(order.begin(), order.begin() + ars);
  std::shuffle(order.begin(), order.end(), rng);
  t.edge_clouds.assign(order.begin(), order.begin() + ecs);
  std::sort(t.access_routers.begin(), t.access_routers.end());
  std::sort(t.edge_clouds.begin(), t.edge_clouds.end());
  return t;
}

/// Instance over `t` with explicit flows; capacities default to ample.
inline Instance instance(const Topology& t, std::vector<Flow> flows, double w = 1000.0, double c = 1000.0) {
  Instance inst;
  inst.topology_seed = t.seed;
  inst.num_access_routers = t.num_access_routers();
  inst.num_edge_clouds = t.num_edge_clouds();
  inst.num_links = t.num_links();
  inst.flows = std::move(flows);
  inst.ec_capacity.assign(inst.num_edge_clouds, w);
  inst.link_capacity.assign(inst.num_links, c);
  return inst;
}

/// Tight ranges so capacities bind on tiny graphs.
inline ScenarioParams tight_params() {
  ScenarioParams p;
  p.ec_capacity = {20.0, 80.0};
  p.link_capacity = {4.0, 15.0};
  p.sample_weights = true;
  p.alpha_range = {0.05, 1.0};
  p.beta_range = {0.05, 1.0};
  p.hops_to_datacenter = 6;
  return p;
}

/// The reference 13-node network with 7 ARs, 6 ECs and 20 links.
inline Topology reference_topology(std::uint64_t seed = 1) {
  TopologyConfig cfg;
  cfg.seed = seed;
  return build_topology(cfg);
}

}  // namespace fixture
