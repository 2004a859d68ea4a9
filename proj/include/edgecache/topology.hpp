#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace edgecache {

struct TopologyConfig {
  int node_count = 13;
  int min_degree = 2;
  int max_degree = 5;
  int link_count = 20;
  int access_routers = 7;
  int edge_clouds = 6;
  // Nodes that are both access router and edge cloud.
  int overlap = 1;
  std::uint64_t seed = 1;
  int max_attempts = 10000;
};

struct Link {
  int id = 0;
  int u = 0;  // u < v
  int v = 0;

  bool operator==(const Link&) const = default;
};

/// Undirected network with designated access routers (A) and edge clouds (E).
/// Link ids are 0..|L|-1 and index `links` directly.
struct Topology {
  int node_count = 0;
  std::vector<Link> links;
  std::vector<int> access_routers;  // sorted node ids
  std::vector<int> edge_clouds;     // sorted node ids
  std::uint64_t seed = 0;

  int num_access_routers() const { return static_cast<int>(access_routers.size()); }
  int num_edge_clouds() const { return static_cast<int>(edge_clouds.size()); }
  int num_links() const { return static_cast<int>(links.size()); }

  std::vector<std::vector<int>> adjacency() const;
  /// Link id joining u and v, or -1.
  int link_between(int u, int v) const;

  bool operator==(const Topology&) const = default;
};

/// Hop counts N_ae, path incidence B_lae and the stored shortest paths.
struct PathTables {
  int num_access_routers = 0;
  int num_edge_clouds = 0;
  int num_links = 0;
  std::vector<int> hops;                 // [a * |E| + e]
  std::vector<std::uint8_t> incidence;   // [(l * |A| + a) * |E| + e]
  std::vector<std::vector<int>> paths;   // [a * |E| + e], node ids from a to e

  int hop(int a, int e) const { return hops[a * num_edge_clouds + e]; }
  bool on_path(int l, int a, int e) const {
    return incidence[(l * num_access_routers + a) * num_edge_clouds + e] != 0;
  }
  const std::vector<int>& path(int a, int e) const { return paths[a * num_edge_clouds + e]; }
  /// Link ids along the stored (a, e) path, in path order.
  std::vector<int> path_links(const Topology& t, int a, int e) const;

  bool operator==(const PathTables&) const = default;
};

/// Random connected graph meeting the degree band and link target.
/// Throws Error(infeasible_config) or Error(rejection_limit_exceeded).
Topology build_topology(const TopologyConfig& cfg);

/// Checks connectivity, degree band, id ranges and link uniqueness.
bool is_valid_topology(const Topology& t, int min_degree, int max_degree);

/// BFS hop counts with lexicographically smallest shortest paths.
PathTables shortest_paths(const Topology& t);

nlohmann::json topology_to_json(const Topology& t, const PathTables& pt);
/// Parses a topology document; the path tables are read back as stored.
std::pair<Topology, PathTables> topology_from_json(const nlohmann::json& j);

void save_topology(const std::string& path, const Topology& t, const PathTables& pt);
std::pair<Topology, PathTables> load_topology(const std::string& path);

}  // namespace edgecache
