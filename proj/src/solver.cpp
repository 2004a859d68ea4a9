#include "edgecache/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "edgecache/error.hpp"

namespace edgecache {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntTol = 1e-6;
constexpr double kGapTol = 1e-6;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int branch_priority(VarFamily f) {
  switch (f) {
    case VarFamily::x: return 3;
    case VarFamily::z: return 2;
    case VarFamily::y: return 1;
    default: return 0;
  }
}

void fill_solution(const MilpModel& m, const std::vector<double>& values, Solution& s) {
  const auto& d = m.dims;
  s.dims = d;
  s.values = values;
  s.has_solution = true;
  s.x.assign(static_cast<std::size_t>(d.flows) * d.edge_clouds, 0);
  s.y.assign(static_cast<std::size_t>(d.flows) * d.links, 0);
  s.z.assign(static_cast<std::size_t>(d.flows) * d.access_routers * d.edge_clouds, 0);
  s.t.assign(d.edge_clouds, 0.0);
  s.chi.assign(static_cast<std::size_t>(d.flows) * d.edge_clouds, 0.0);
  for (int k = 0; k < d.flows; ++k) {
    for (int e = 0; e < d.edge_clouds; ++e) {
      s.x[k * d.edge_clouds + e] = values[m.x(k, e)] > 0.5;
      s.chi[k * d.edge_clouds + e] = values[m.chi(k, e)];
      for (int a = 0; a < d.access_routers; ++a)
        s.z[(k * d.access_routers + a) * d.edge_clouds + e] = values[m.z(k, a, e)] > 0.5;
    }
    for (int l = 0; l < d.links; ++l) s.y[k * d.links + l] = values[m.y(k, l)] > 0.5;
  }
  for (int e = 0; e < d.edge_clouds; ++e) s.t[e] = values[m.t(e)];
}

// Shifts fractional binaries to integers when every row they touch keeps
// enough slack; continuous columns stay put. Returns true on success.
bool zi_round(const lp::Problem& p, const std::vector<int>& binaries,
              const std::vector<std::vector<Term>>& columns, std::vector<double>& x) {
  std::vector<double> activity(p.num_rows(), 0.0);
  for (int i = 0; i < p.num_rows(); ++i)
    for (const auto& t : p.rows[i]) activity[i] += t.coef * x[t.var];
  for (int j : binaries) {
    const double v = x[j];
    const double frac = v - std::floor(v);
    if (frac < kIntTol || frac > 1.0 - kIntTol) continue;
    double up = kInf, down = kInf;
    for (const auto& t : columns[j]) {
      const int i = t.var;
      const double a = t.coef;
      const double room_le = p.rhs[i] - activity[i];  // how far activity may rise
      const double room_ge = activity[i] - p.rhs[i];  // how far it may fall
      switch (p.sense[i]) {
        case Sense::eq: up = down = 0.0; break;
        case Sense::le:
          if (a > 0) up = std::min(up, room_le / a);
          else down = std::min(down, room_le / -a);
          break;
        case Sense::ge:
          if (a > 0) down = std::min(down, room_ge / a);
          else up = std::min(up, room_ge / -a);
          break;
      }
    }
    const double need_up = std::ceil(v) - v, need_down = v - std::floor(v);
    const bool can_up = up >= need_up - 1e-9 && std::ceil(v) <= p.upper[j];
    const bool can_down = down >= need_down - 1e-9 && std::floor(v) >= p.lower[j];
    double shift;
    if (can_up && can_down) shift = p.cost[j] * need_up <= -p.cost[j] * need_down ? need_up : -need_down;
    else if (can_up) shift = need_up;
    else if (can_down) shift = -need_down;
    else return false;
    x[j] += shift;
    for (const auto& t : columns[j]) activity[t.var] += t.coef * shift;
  }
  return true;
}

struct Node {
  std::vector<std::pair<int, std::uint8_t>> fixings;  // LP column -> value
  double parent_bound = -kInf;
  long parent = -1;
};

}  // namespace

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::timeout_incumbent: return "timeout-incumbent";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

std::vector<int> Solution::placement() const {
  std::vector<int> out(dims.flows, -1);
  for (int k = 0; k < dims.flows; ++k)
    for (int e = 0; e < dims.edge_clouds; ++e)
      if (x[k * dims.edge_clouds + e]) out[k] = e;
  return out;
}

std::vector<std::uint8_t> placement_matrix(const std::vector<int>& placement, int edge_clouds) {
  std::vector<std::uint8_t> x(placement.size() * edge_clouds, 0);
  for (std::size_t k = 0; k < placement.size(); ++k)
    if (placement[k] >= 0) x[k * edge_clouds + placement[k]] = 1;
  return x;
}

VarBounds model_bounds(const MilpModel& m) {
  VarBounds b;
  for (const auto& v : m.vars) {
    b.lower.push_back(v.lower);
    b.upper.push_back(v.upper);
  }
  return b;
}

LpRelaxation solve_lp_relaxation(const MilpModel& m, const VarBounds& bounds) {
  if (bounds.lower.size() != m.vars.size() || bounds.upper.size() != m.vars.size())
    throw Error(ErrorCode::dimension_mismatch, "bounds do not match model");
  for (std::size_t j = 0; j < m.vars.size(); ++j)
    if (bounds.lower[j] > bounds.upper[j])
      throw Error(ErrorCode::invalid_argument, "inconsistent bounds for variable " + std::to_string(j));
  LpRelaxation out;
  const auto view = lp::make_model_lp(m);
  if (view.trivially_infeasible) {
    out.status = lp::Status::infeasible;
    return out;
  }
  lp::DualSimplex simplex(view.problem);
  for (int c = 0; c < view.problem.num_cols(); ++c) {
    const int j = view.var_of_column[c];
    const double lo = std::max(bounds.lower[j], m.vars[j].lower);
    const double hi = std::min(bounds.upper[j], m.vars[j].upper);
    if (lo > hi) {
      out.status = lp::Status::infeasible;
      return out;
    }
    simplex.set_bounds(c, lo, hi);
  }
  out.status = simplex.solve();
  out.iterations = simplex.iterations();
  if (out.status == lp::Status::optimal) {
    const auto cols = simplex.primal();
    out.values.assign(m.vars.size(), 0.0);
    for (int c = 0; c < view.problem.num_cols(); ++c) out.values[view.var_of_column[c]] = cols[c];
    out.objective = simplex.objective() + m.objective_constant;
  }
  return out;
}

Solution solve_bnb(const MilpModel& m, const BnbOptions& opts) {
  const auto start = Clock::now();
  Solution result;
  result.dims = m.dims;
  const auto view = lp::make_model_lp(m);
  if (view.trivially_infeasible) {
    result.status = SolveStatus::infeasible;
    result.stats.wall_time_s = seconds_since(start);
    return result;
  }
  const auto& prob = view.problem;
  const int ncols = prob.num_cols();

  std::vector<int> binaries;
  std::vector<int> priority(ncols, 0);
  for (int c = 0; c < ncols; ++c) {
    const auto& v = m.vars[view.var_of_column[c]];
    if (v.integer) {
      binaries.push_back(c);
      priority[c] = branch_priority(v.family);
    }
  }
  std::vector<std::vector<Term>> columns(ncols);
  for (int i = 0; i < prob.num_rows(); ++i)
    for (const auto& t : prob.rows[i]) columns[t.var].push_back({i, t.coef});

  auto to_model = [&](const std::vector<double>& cols) {
    std::vector<double> full(m.vars.size(), 0.0);
    for (int c = 0; c < ncols; ++c) full[view.var_of_column[c]] = cols[c];
    for (int c : binaries) full[view.var_of_column[c]] = std::round(full[view.var_of_column[c]]);
    return full;
  };

  double incumbent = kInf;
  std::vector<double> incumbent_values;
  auto offer = [&](const std::vector<double>& full) {
    if (m.max_violation(full) > 1e-6) return;
    const double obj = m.objective(full);
    if (obj < incumbent - 1e-12) {
      incumbent = obj;
      incumbent_values = full;
    }
  };

  if (opts.warm_start && opts.warm_start->size() == m.vars.size()) {
    bool integral = true;
    for (int c : binaries) {
      const double v = (*opts.warm_start)[view.var_of_column[c]];
      integral = integral && std::abs(v - std::round(v)) <= kIntTol;
    }
    if (integral) offer(*opts.warm_start);
  }

  lp::DualSimplex simplex(prob);
  std::vector<double> root_lo(prob.lower), root_hi(prob.upper);
  std::vector<double> cur_lo(root_lo), cur_hi(root_hi);
  auto apply = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    for (int c : binaries)
      if (lo[c] != cur_lo[c] || hi[c] != cur_hi[c]) {
        simplex.set_bounds(c, lo[c], hi[c]);
        cur_lo[c] = lo[c];
        cur_hi[c] = hi[c];
      }
  };

  if (opts.zero_heuristic && !binaries.empty()) {
    std::vector<double> lo(root_lo), hi(root_hi);
    for (int c : binaries) hi[c] = lo[c];
    apply(lo, hi);
    if (simplex.solve() == lp::Status::optimal) offer(to_model(simplex.primal()));
  }

  // Best-bound selection with depth-first dives: each processed node hands
  // its preferred child straight to the next iteration.
  auto worse = [](const Node& a, const Node& b) { return a.parent_bound > b.parent_bound; };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  std::optional<Node> dive = Node{};
  long node_id = 0;
  bool hit_limit = false;
  std::vector<double> lo(ncols), hi(ncols);

  while (dive || !open.empty()) {
    if (result.stats.nodes >= opts.limits.node_limit || seconds_since(start) > opts.limits.time_limit_s) {
      hit_limit = true;
      break;
    }
    Node node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
    } else {
      node = open.top();
      open.pop();
    }
    if (node.parent_bound >= incumbent - kGapTol) continue;

    lo = root_lo;
    hi = root_hi;
    for (const auto& [c, v] : node.fixings) lo[c] = hi[c] = v;
    apply(lo, hi);

    auto status = simplex.solve();
    if (status == lp::Status::numerical || status == lp::Status::iteration_limit) {
      if (simplex.refactor()) status = simplex.solve();
    }
    const long id = node_id++;
    ++result.stats.nodes;
    if (status == lp::Status::infeasible) continue;

    double bound;
    std::vector<double> cols;
    if (status == lp::Status::optimal) {
      bound = simplex.objective() + m.objective_constant;
      cols = simplex.primal();
    } else {
      // No trustworthy bound: keep splitting without pruning.
      bound = -kInf;
      cols.assign(ncols, 0.0);
      for (int c : binaries) cols[c] = lo[c] == hi[c] ? lo[c] : 0.5;
    }
    if (opts.record_trace) result.trace.push_back({id, node.parent, node.parent_bound, bound});
    if (bound >= incumbent - kGapTol) continue;

    int branch = -1;
    int best_priority = -1;
    double best_frac = 0.0;
    for (int c : binaries) {
      const double f = cols[c] - std::floor(cols[c]);
      const double dist = std::min(f, 1.0 - f);
      if (dist <= kIntTol) continue;
      if (priority[c] > best_priority || (priority[c] == best_priority && dist > best_frac + 1e-12)) {
        best_priority = priority[c];
        best_frac = dist;
        branch = c;
      }
    }

    if (branch < 0) {
      if (status == lp::Status::optimal) offer(to_model(cols));
      continue;
    }
    if (status == lp::Status::optimal) {
      auto rounded = cols;
      if (zi_round(prob, binaries, columns, rounded)) offer(to_model(rounded));
      if (bound >= incumbent - kGapTol) continue;
    }

    const std::uint8_t first = cols[branch] >= 0.5 ? 1 : 0;
    for (std::uint8_t v : {static_cast<std::uint8_t>(1 - first), first}) {
      Node child;
      child.fixings = node.fixings;
      child.fixings.emplace_back(branch, v);
      child.parent_bound = bound;
      child.parent = id;
      if (v == first) dive = std::move(child);
      else open.push(std::move(child));
    }
  }

  result.stats.lp_iterations = simplex.iterations();
  result.stats.wall_time_s = seconds_since(start);
  if (incumbent_values.empty()) {
    result.status = hit_limit ? SolveStatus::timeout_incumbent : SolveStatus::infeasible;
    return result;
  }
  fill_solution(m, incumbent_values, result);
  result.objective = incumbent;
  result.status = hit_limit ? SolveStatus::timeout_incumbent : SolveStatus::optimal;
  return result;
}

Solution enumerate_optimal(const Instance& inst, const PathTables& pt, double cap, const ModelOptions& opts) {
  const int K = inst.num_flows(), A = inst.num_access_routers, E = inst.num_edge_clouds, L = inst.num_links;
  const double size = std::pow(E + 1.0, K) * std::pow(2.0, static_cast<double>(K) * A);
  if (size > cap)
    throw Error(ErrorCode::instance_too_large, "enumeration space " + std::to_string(size) + " exceeds cap");
  if (L > 64 || A > 20) throw Error(ErrorCode::instance_too_large, "too many links or routers to enumerate");
  const auto model = build_milp(inst, pt, opts);
  const double n_t = inst.hops_to_datacenter;

  // Per flow and EC, each hit mask's expected hops and link footprint.
  struct Option {
    double hops = 0.0;
    std::uint64_t links = 0;
  };
  const int masks = 1 << A;
  std::vector<Option> options(static_cast<std::size_t>(K) * E * masks);
  for (int k = 0; k < K; ++k)
    for (int e = 0; e < E; ++e)
      for (int mask = 0; mask < masks; ++mask) {
        Option o;
        for (int a = 0; a < A; ++a) {
          const double p = inst.flows[k].mobility[a];
          if (mask >> a & 1) {
            o.hops += p * pt.hop(a, e);
            for (int l = 0; l < L; ++l)
              if (pt.on_path(l, a, e)) o.links |= std::uint64_t{1} << l;
          } else {
            o.hops += p * n_t;
          }
        }
        options[(static_cast<std::size_t>(k) * E + e) * masks + mask] = o;
      }

  std::vector<int> place(K, -1), hit(K, 0);
  std::vector<int> best_place, best_hit;
  double best = kInf;
  std::vector<double> used(E, 0.0), load(L, 0.0);

  auto evaluate_leaf = [&]() {
    double hosting = 0.0, transmission = 0.0;
    std::vector<double> util(E, 0.0);
    for (int k = 0; k < K; ++k)
      if (place[k] >= 0) util[place[k]] += inst.storage_ratio(k, place[k]);
    std::fill(load.begin(), load.end(), 0.0);
    for (int k = 0; k < K; ++k) {
      if (place[k] < 0) {
        transmission += n_t;
        continue;
      }
      const auto& o = options[(static_cast<std::size_t>(k) * E + place[k]) * masks + hit[k]];
      transmission += o.hops;
      hosting += 1.0 / (1.0 - util[place[k]]);
      for (int l = 0; l < L; ++l)
        if (o.links >> l & 1) load[l] += inst.flows[k].bandwidth;
    }
    for (int l = 0; l < L; ++l)
      if (load[l] > inst.link_capacity[l] + 1e-9) return;
    const double tc = inst.alpha * hosting + inst.beta * transmission;
    if (tc < best - 1e-12) {
      best = tc;
      best_place = place;
      best_hit = hit;
    }
  };

  auto recurse_hits = [&](auto&& self, int k) -> void {
    if (k == K) {
      evaluate_leaf();
      return;
    }
    if (place[k] < 0) {
      hit[k] = 0;
      self(self, k + 1);
      return;
    }
    for (int mask = 0; mask < masks; ++mask) {
      hit[k] = mask;
      self(self, k + 1);
    }
  };

  auto recurse_place = [&](auto&& self, int k) -> void {
    if (k == K) {
      recurse_hits(recurse_hits, 0);
      return;
    }
    for (int e = -1; e < E; ++e) {
      if (e >= 0) {
        const double cap_e = (1.0 - opts.epsilon_cap) * inst.ec_capacity[e];
        if (used[e] + inst.flows[k].storage > cap_e + 1e-9) continue;
        used[e] += inst.flows[k].storage;
      }
      place[k] = e;
      self(self, k + 1);
      if (e >= 0) used[e] -= inst.flows[k].storage;
    }
    place[k] = -1;
  };
  recurse_place(recurse_place, 0);

  Solution s;
  s.dims = model.dims;
  if (best_place.empty()) {
    s.status = SolveStatus::infeasible;
    return s;
  }
  std::vector<std::uint8_t> z(static_cast<std::size_t>(K) * A * E, 0);
  for (int k = 0; k < K; ++k)
    if (best_place[k] >= 0)
      for (int a = 0; a < A; ++a)
        if (best_hit[k] >> a & 1) z[(k * A + a) * E + best_place[k]] = 1;
  fill_solution(model, complete_assignment(model, inst, pt, placement_matrix(best_place, E), z), s);
  s.objective = best;
  s.status = SolveStatus::optimal;
  return s;
}

double PenaltyConfig::resolve(const Instance& inst) const {
  if (per_violation) return *per_violation;
  const double scaled = inst.beta * inst.hops_to_datacenter * inst.num_flows();
  return scaled > 0.0 ? scaled : static_cast<double>(inst.hops_to_datacenter) * inst.num_flows();
}

std::string Violation::describe() const {
  std::string s(to_string(family));
  if (flow >= 0) s += " k=" + std::to_string(flow);
  if (router >= 0) s += " a=" + std::to_string(router);
  if (cloud >= 0) s += " e=" + std::to_string(cloud);
  if (link >= 0) s += " l=" + std::to_string(link);
  return s;
}

EvaluatedSolution evaluate_assignment(const Instance& inst, const PathTables& pt,
                                      const std::vector<std::uint8_t>& x,
                                      const std::vector<std::uint8_t>& z, const PenaltyConfig& penalty,
                                      double epsilon_cap) {
  const int K = inst.num_flows(), A = inst.num_access_routers, E = inst.num_edge_clouds, L = inst.num_links;
  if (x.size() != static_cast<std::size_t>(K) * E || z.size() != static_cast<std::size_t>(K) * A * E)
    throw Error(ErrorCode::dimension_mismatch, "assignment does not match instance");
  const double n_t = inst.hops_to_datacenter;
  constexpr double tol = 1e-9;

  EvaluatedSolution r;
  r.dims = {K, A, E, L};
  r.has_solution = true;
  r.status = SolveStatus::optimal;
  r.x = x;
  r.z = z;
  r.y.assign(static_cast<std::size_t>(K) * L, 0);
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < A; ++a)
      for (int e = 0; e < E; ++e)
        if (z[(k * A + a) * E + e])
          for (int l = 0; l < L; ++l)
            if (pt.on_path(l, a, e)) r.y[k * L + l] = 1;

  r.utilization.assign(E, 0.0);
  for (int e = 0; e < E; ++e)
    for (int k = 0; k < K; ++k)
      if (x[k * E + e]) r.utilization[e] += inst.storage_ratio(k, e);

  r.t.assign(E, 0.0);
  r.chi.assign(static_cast<std::size_t>(K) * E, 0.0);
  for (int e = 0; e < E; ++e) {
    const double u = r.utilization[e];
    if (u >= 1.0) {
      r.overloaded.push_back(e);
      continue;
    }
    r.t[e] = 1.0 / (1.0 - u);
    for (int k = 0; k < K; ++k)
      if (x[k * E + e]) {
        r.chi[k * E + e] = r.t[e];
        r.hosting_cost += r.t[e];
      }
  }
  for (int k = 0; k < K; ++k) {
    double hit_probability = 0.0;
    for (int a = 0; a < A; ++a)
      for (int e = 0; e < E; ++e)
        if (z[(k * A + a) * E + e]) {
          const double p = inst.flows[k].mobility[a];
          r.transmission_cost += p * pt.hop(a, e);
          hit_probability += p;
        }
    r.transmission_cost += (1.0 - hit_probability) * n_t;
  }
  r.objective = inst.alpha * r.hosting_cost + inst.beta * r.transmission_cost;

  for (int k = 0; k < K; ++k) {
    int hosts = 0;
    for (int e = 0; e < E; ++e) hosts += x[k * E + e];
    if (hosts > 1) r.violations.push_back({RowFamily::one_host, k, -1, -1, -1});
  }
  for (int e = 0; e < E; ++e) {
    double used = 0.0;
    for (int k = 0; k < K; ++k)
      if (x[k * E + e]) used += inst.flows[k].storage;
    if (used > (1.0 - epsilon_cap) * inst.ec_capacity[e] + tol)
      r.violations.push_back({RowFamily::storage, -1, -1, e, -1});
  }
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < A; ++a) {
      int routes = 0;
      for (int e = 0; e < E; ++e) {
        routes += z[(k * A + a) * E + e];
        if (z[(k * A + a) * E + e] && !x[k * E + e])
          r.violations.push_back({RowFamily::route_needs_host, k, a, e, -1});
      }
      if (routes > 1) r.violations.push_back({RowFamily::one_route, k, a, -1, -1});
    }
  for (int l = 0; l < L; ++l) {
    double load = 0.0;
    for (int k = 0; k < K; ++k)
      if (r.y[k * L + l]) load += inst.flows[k].bandwidth;
    if (load > inst.link_capacity[l] + tol) r.violations.push_back({RowFamily::link_capacity, -1, -1, -1, l});
  }

  r.penalty = penalty.resolve(inst) * static_cast<double>(r.violations.size());
  r.total_with_penalty = r.objective + r.penalty;
  return r;
}

EvaluatedSolution evaluate_solution(const Instance& inst, const PathTables& pt, const Solution& s,
                                    const PenaltyConfig& penalty, double epsilon_cap) {
  if (!s.has_solution) throw Error(ErrorCode::invalid_argument, "solution has no assignment");
  auto r = evaluate_assignment(inst, pt, s.x, s.z, penalty, epsilon_cap);
  r.status = s.status;
  r.stats = s.stats;
  r.values = s.values;
  return r;
}

nlohmann::json solution_to_json(const Solution& s) {
  auto ones = [](const std::vector<std::uint8_t>& v) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i]) idx.push_back(static_cast<int>(i));
    return idx;
  };
  nlohmann::json j;
  j["format"] = "edgecache.solution";
  j["version"] = 1;
  j["status"] = std::string(to_string(s.status));
  j["has_solution"] = s.has_solution;
  j["dims"] = {{"flows", s.dims.flows},
               {"access_routers", s.dims.access_routers},
               {"edge_clouds", s.dims.edge_clouds},
               {"links", s.dims.links}};
  j["total_cost"] = s.objective;
  j["x"] = ones(s.x);
  j["y"] = ones(s.y);
  j["z"] = ones(s.z);
  j["t"] = s.t;
  j["chi"] = s.chi;
  j["placement"] = s.has_solution ? nlohmann::json(s.placement()) : nlohmann::json::array();
  j["stats"] = {{"nodes", s.stats.nodes},
                {"lp_iterations", s.stats.lp_iterations},
                {"wall_time_s", s.stats.wall_time_s}};
  return j;
}

nlohmann::json evaluated_to_json(const EvaluatedSolution& s) {
  auto j = solution_to_json(s);
  j["utilization"] = s.utilization;
  j["hosting_cost"] = s.hosting_cost;
  j["transmission_cost"] = s.transmission_cost;
  j["penalty"] = s.penalty;
  j["total_with_penalty"] = s.total_with_penalty;
  j["feasible"] = s.feasible();
  j["overloaded"] = s.overloaded;
  auto v = nlohmann::json::array();
  for (const auto& viol : s.violations) v.push_back(viol.describe());
  j["violations"] = v;
  return j;
}

}  // namespace edgecache
