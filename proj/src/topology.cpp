#include "edgecache/topology.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <set>

#include "edgecache/error.hpp"

namespace edgecache {

namespace {

constexpr int kTopologyVersion = 1;

void check_config(const TopologyConfig& c) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::infeasible_config, why); };
  const long n = c.node_count;
  if (n < 2) fail("need at least two nodes");
  if (c.min_degree < 1 || c.min_degree > c.max_degree) fail("bad degree band");
  if (c.max_degree > n - 1) fail("max degree exceeds node count - 1");
  if (c.link_count < n - 1) fail("too few links for a connected graph");
  if (c.link_count > n * (n - 1) / 2) fail("too many links for a simple graph");
  if (2L * c.link_count < n * c.min_degree) fail("link count below degree band");
  if (2L * c.link_count > n * c.max_degree) fail("link count above degree band");
  if (c.access_routers < 1 || c.edge_clouds < 1) fail("need at least one AR and one EC");
  if (c.overlap < 0 || c.overlap > std::min(c.access_routers, c.edge_clouds)) fail("bad overlap");
  if (c.access_routers + c.edge_clouds - c.overlap > n) fail("AR/EC sets do not fit in node count");
  if (c.max_attempts < 1) fail("max_attempts must be positive");
}

// One attempt at a random graph; returns false when the degree band blocks progress.
bool try_build_edges(const TopologyConfig& c, std::mt19937_64& rng,
                     std::set<std::pair<int, int>>& edges) {
  const int n = c.node_count;
  std::vector<int> degree(n, 0);
  edges.clear();
  auto add = [&](int u, int v) {
    edges.insert({std::min(u, v), std::max(u, v)});
    ++degree[u];
    ++degree[v];
  };
  auto adjacent = [&](int u, int v) { return edges.count({std::min(u, v), std::max(u, v)}) > 0; };

  // Random spanning tree: attach each node of a random order to an earlier one.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 1; i < n; ++i) {
    std::vector<int> candidates;
    for (int j = 0; j < i; ++j)
      if (degree[order[j]] < c.max_degree) candidates.push_back(order[j]);
    if (candidates.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    add(order[i], candidates[pick(rng)]);
  }

  auto eligible_partners = [&](int u) {
    std::vector<int> out;
    for (int v = 0; v < n; ++v)
      if (v != u && degree[v] < c.max_degree && !adjacent(u, v)) out.push_back(v);
    return out;
  };

  // Lift nodes below the minimum degree, preferring partners that are also deficient.
  while (true) {
    std::vector<int> deficient;
    for (int v = 0; v < n; ++v)
      if (degree[v] < c.min_degree) deficient.push_back(v);
    if (deficient.empty()) break;
    if (static_cast<int>(edges.size()) >= c.link_count) return false;
    std::uniform_int_distribution<std::size_t> pick_u(0, deficient.size() - 1);
    const int u = deficient[pick_u(rng)];
    auto partners = eligible_partners(u);
    std::vector<int> deficient_partners;
    for (int v : partners)
      if (degree[v] < c.min_degree) deficient_partners.push_back(v);
    const auto& pool = deficient_partners.empty() ? partners : deficient_partners;
    if (pool.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick_v(0, pool.size() - 1);
    add(u, pool[pick_v(rng)]);
  }

  while (static_cast<int>(edges.size()) < c.link_count) {
    std::vector<std::pair<int, int>> pairs;
    for (int u = 0; u < n; ++u) {
      if (degree[u] >= c.max_degree) continue;
      for (int v = u + 1; v < n; ++v)
        if (degree[v] < c.max_degree && !adjacent(u, v)) pairs.emplace_back(u, v);
    }
    if (pairs.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    const auto [u, v] = pairs[pick(rng)];
    add(u, v);
  }
  return true;
}

}  // namespace

std::vector<std::vector<int>> Topology::adjacency() const {
  std::vector<std::vector<int>> adj(node_count);
  for (const auto& l : links) {
    adj[l.u].push_back(l.v);
    adj[l.v].push_back(l.u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

int Topology::link_between(int u, int v) const {
  const int lo = std::min(u, v), hi = std::max(u, v);
  for (const auto& l : links)
    if (l.u == lo && l.v == hi) return l.id;
  return -1;
}

std::vector<int> PathTables::path_links(const Topology& t, int a, int e) const {
  const auto& nodes = path(a, e);
  std::vector<int> out;
  for (std::size_t i = 1; i < nodes.size(); ++i) out.push_back(t.link_between(nodes[i - 1], nodes[i]));
  return out;
}

Topology build_topology(const TopologyConfig& cfg) {
  check_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::set<std::pair<int, int>> edges;
  bool ok = false;
  for (int attempt = 0; attempt < cfg.max_attempts && !ok; ++attempt) {
    ok = try_build_edges(cfg, rng, edges) && static_cast<int>(edges.size()) == cfg.link_count;
  }
  if (!ok)
    throw Error(ErrorCode::rejection_limit_exceeded,
                "no graph met the degree band after " + std::to_string(cfg.max_attempts) + " attempts");

  Topology t;
  t.node_count = cfg.node_count;
  t.seed = cfg.seed;
  int id = 0;
  for (const auto& [u, v] : edges) t.links.push_back({id++, u, v});

  std::vector<int> nodes(cfg.node_count);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  t.access_routers.assign(nodes.begin(), nodes.begin() + cfg.access_routers);
  t.edge_clouds.assign(nodes.begin(), nodes.begin() + cfg.overlap);
  t.edge_clouds.insert(t.edge_clouds.end(), nodes.begin() + cfg.access_routers,
                       nodes.begin() + cfg.access_routers + (cfg.edge_clouds - cfg.overlap));
  std::sort(t.access_routers.begin(), t.access_routers.end());
  std::sort(t.edge_clouds.begin(), t.edge_clouds.end());
  return t;
}

bool is_valid_topology(const Topology& t, int min_degree, int max_degree) {
  const int n = t.node_count;
  if (n <= 0) return false;
  std::set<std::pair<int, int>> seen;
  std::vector<int> degree(n, 0);
  for (std::size_t i = 0; i < t.links.size(); ++i) {
    const auto& l = t.links[i];
    if (l.id != static_cast<int>(i) || l.u < 0 || l.v >= n || l.u >= l.v) return false;
    if (!seen.insert({l.u, l.v}).second) return false;
    ++degree[l.u];
    ++degree[l.v];
  }
  for (int d : degree)
    if (d < min_degree || d > max_degree) return false;
  for (int v : t.access_routers)
    if (v < 0 || v >= n) return false;
  for (int v : t.edge_clouds)
    if (v < 0 || v >= n) return false;

  const auto adj = t.adjacency();
  std::vector<bool> reached(n, false);
  std::queue<int> q;
  q.push(0);
  reached[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!reached[v]) {
        reached[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == n;
}

PathTables shortest_paths(const Topology& t) {
  const int num_a = t.num_access_routers();
  const int num_e = t.num_edge_clouds();
  const int num_l = t.num_links();
  const auto adj = t.adjacency();

  PathTables pt;
  pt.num_access_routers = num_a;
  pt.num_edge_clouds = num_e;
  pt.num_links = num_l;
  pt.hops.assign(static_cast<std::size_t>(num_a) * num_e, 0);
  pt.incidence.assign(static_cast<std::size_t>(num_l) * num_a * num_e, 0);
  pt.paths.assign(static_cast<std::size_t>(num_a) * num_e, {});

  for (int e = 0; e < num_e; ++e) {
    const int target = t.edge_clouds[e];
    std::vector<int> dist(t.node_count, -1);
    std::queue<int> q;
    dist[target] = 0;
    q.push(target);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    for (int a = 0; a < num_a; ++a) {
      // Walking to the smallest neighbour one hop closer yields the
      // lexicographically smallest shortest node sequence.
      int cur = t.access_routers[a];
      std::vector<int> nodes{cur};
      while (cur != target) {
        for (int v : adj[cur])
          if (dist[v] == dist[cur] - 1) {
            cur = v;
            break;
          }
        nodes.push_back(cur);
      }
      pt.hops[a * num_e + e] = dist[t.access_routers[a]];
      for (std::size_t i = 1; i < nodes.size(); ++i) {
        const int l = t.link_between(nodes[i - 1], nodes[i]);
        pt.incidence[(static_cast<std::size_t>(l) * num_a + a) * num_e + e] = 1;
      }
      pt.paths[a * num_e + e] = std::move(nodes);
    }
  }
  return pt;
}

nlohmann::json topology_to_json(const Topology& t, const PathTables& pt) {
  nlohmann::json j;
  j["format"] = "edgecache.topology";
  j["version"] = kTopologyVersion;
  j["seed"] = t.seed;
  std::vector<int> nodes(t.node_count);
  std::iota(nodes.begin(), nodes.end(), 0);
  j["nodes"] = nodes;
  auto links = nlohmann::json::array();
  for (const auto& l : t.links) links.push_back({{"id", l.id}, {"u", l.u}, {"v", l.v}});
  j["links"] = links;
  j["access_routers"] = t.access_routers;
  j["edge_clouds"] = t.edge_clouds;
  j["hops"] = pt.hops;
  j["incidence"] = pt.incidence;
  j["paths"] = pt.paths;
  return j;
}

std::pair<Topology, PathTables> topology_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "edgecache.topology")
      throw Error(ErrorCode::malformed_file, "not a topology document");
    if (j.at("version").get<int>() != kTopologyVersion)
      throw Error(ErrorCode::version_mismatch,
                  "topology version " + std::to_string(j.at("version").get<int>()));
    Topology t;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.node_count = static_cast<int>(j.at("nodes").size());
    for (const auto& l : j.at("links")) t.links.push_back({l.at("id"), l.at("u"), l.at("v")});
    t.access_routers = j.at("access_routers").get<std::vector<int>>();
    t.edge_clouds = j.at("edge_clouds").get<std::vector<int>>();
    PathTables pt;
    pt.num_access_routers = t.num_access_routers();
    pt.num_edge_clouds = t.num_edge_clouds();
    pt.num_links = t.num_links();
    pt.hops = j.at("hops").get<std::vector<int>>();
    pt.incidence = j.at("incidence").get<std::vector<std::uint8_t>>();
    pt.paths = j.at("paths").get<std::vector<std::vector<int>>>();
    const std::size_t ae = static_cast<std::size_t>(pt.num_access_routers) * pt.num_edge_clouds;
    if (pt.hops.size() != ae || pt.paths.size() != ae || pt.incidence.size() != ae * pt.num_links)
      throw Error(ErrorCode::malformed_file, "path table sizes disagree with topology");
    return {std::move(t), std::move(pt)};
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::malformed_file, ex.what());
  }
}

void save_topology(const std::string& path, const Topology& t, const PathTables& pt) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path);
  out << topology_to_json(t, pt).dump(1) << '\n';
  if (!out) throw Error(ErrorCode::io_failure, "write failed for " + path);
}

std::pair<Topology, PathTables> load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::malformed_file, ex.what());
  }
  return topology_from_json(j);
}

}  // namespace edgecache
