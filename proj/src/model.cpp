#include "edgecache/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "edgecache/error.hpp"

namespace edgecache {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string var_name(const MilpModel& m, int j) {
  const auto& d = m.dims;
  const int ke = d.flows * d.edge_clouds;
  const int kl = d.flows * d.links;
  const int kae = d.flows * d.access_routers * d.edge_clouds;
  if (j < ke) return "x_" + std::to_string(j / d.edge_clouds) + "_" + std::to_string(j % d.edge_clouds);
  j -= ke;
  if (j < kl) return "y_" + std::to_string(j / d.links) + "_" + std::to_string(j % d.links);
  j -= kl;
  if (j < kae) {
    const int e = j % d.edge_clouds;
    const int a = (j / d.edge_clouds) % d.access_routers;
    const int k = j / (d.edge_clouds * d.access_routers);
    return "z_" + std::to_string(k) + "_" + std::to_string(a) + "_" + std::to_string(e);
  }
  j -= kae;
  if (j < d.edge_clouds) return "t_" + std::to_string(j);
  j -= d.edge_clouds;
  return "chi_" + std::to_string(j / d.edge_clouds) + "_" + std::to_string(j % d.edge_clouds);
}

}  // namespace

std::string_view to_string(VarFamily f) {
  switch (f) {
    case VarFamily::x: return "x";
    case VarFamily::y: return "y";
    case VarFamily::z: return "z";
    case VarFamily::t: return "t";
    case VarFamily::chi: return "chi";
  }
  return "?";
}

std::string_view to_string(RowFamily f) {
  switch (f) {
    case RowFamily::one_host: return "one_host";
    case RowFamily::storage: return "storage";
    case RowFamily::one_route: return "one_route";
    case RowFamily::route_needs_host: return "route_needs_host";
    case RowFamily::link_capacity: return "link_capacity";
    case RowFamily::link_use_upper: return "link_use_upper";
    case RowFamily::link_use_lower: return "link_use_lower";
    case RowFamily::utilization: return "utilization";
    case RowFamily::chi_below_t: return "chi_below_t";
    case RowFamily::chi_below_x: return "chi_below_x";
    case RowFamily::chi_above: return "chi_above";
    case RowFamily::chi_floor: return "chi_floor";
    case RowFamily::chi_tight_above: return "chi_tight_above";
    case RowFamily::chi_tight_below: return "chi_tight_below";
    case RowFamily::t_cap: return "t_cap";
  }
  return "?";
}

double MilpModel::objective(const std::vector<double>& values) const {
  double sum = objective_constant;
  for (int j = 0; j < num_vars(); ++j) sum += vars[j].cost * values[j];
  return sum;
}

double MilpModel::max_violation(const std::vector<double>& values) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, vars[j].lower - values[j]);
    worst = std::max(worst, values[j] - vars[j].upper);
  }
  for (const auto& r : rows) {
    double lhs = 0.0;
    for (const auto& term : r.terms) lhs += term.coef * values[term.var];
    switch (r.sense) {
      case Sense::le: worst = std::max(worst, lhs - r.rhs); break;
      case Sense::ge: worst = std::max(worst, r.rhs - lhs); break;
      case Sense::eq: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
    }
  }
  return worst;
}

PredictionMatrix PredictionMatrix::ones(int flows, int edge_clouds) {
  return {flows, edge_clouds, std::vector<std::uint8_t>(static_cast<std::size_t>(flows) * edge_clouds, 1)};
}

PredictionMatrix PredictionMatrix::zeros(int flows, int edge_clouds) {
  return {flows, edge_clouds, std::vector<std::uint8_t>(static_cast<std::size_t>(flows) * edge_clouds, 0)};
}

int full_variable_count(const Dimensions& d) {
  const int k = d.flows, a = d.access_routers, e = d.edge_clouds, l = d.links;
  return k * e + k * l + k * a * e + e + k * e;
}

MilpModel build_milp(const Instance& inst, const PathTables& pt, const ModelOptions& opts) {
  if (inst.num_access_routers != pt.num_access_routers || inst.num_edge_clouds != pt.num_edge_clouds ||
      inst.num_links != pt.num_links)
    throw Error(ErrorCode::dimension_mismatch, "instance and path tables disagree on |A|, |E| or |L|");
  if (!(opts.epsilon_cap > 0.0 && opts.epsilon_cap < 1.0))
    throw Error(ErrorCode::invalid_argument, "epsilon_cap must lie in (0, 1)");

  MilpModel m;
  auto& d = m.dims;
  d.flows = inst.num_flows();
  d.access_routers = inst.num_access_routers;
  d.edge_clouds = inst.num_edge_clouds;
  d.links = inst.num_links;
  const int K = d.flows, A = d.access_routers, E = d.edge_clouds, L = d.links;

  m.epsilon_cap = opts.epsilon_cap;
  m.big_m_chi = 1.0 / opts.epsilon_cap;
  m.big_m_path = static_cast<double>(A) * E;
  const double big_m = m.big_m_chi;
  const double n_t = inst.hops_to_datacenter;

  m.vars.resize(full_variable_count(d));
  auto binary = [](VarFamily f, double cost) { return Variable{f, true, 0.0, 1.0, cost, false}; };
  for (int k = 0; k < K; ++k)
    for (int e = 0; e < E; ++e) m.vars[m.x(k, e)] = binary(VarFamily::x, 0.0);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) m.vars[m.y(k, l)] = binary(VarFamily::y, 0.0);
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < A; ++a)
      for (int e = 0; e < E; ++e) {
        const double p = inst.flows[k].mobility[a];
        m.vars[m.z(k, a, e)] = binary(VarFamily::z, inst.beta * p * (pt.hop(a, e) - n_t));
      }
  for (int e = 0; e < E; ++e) m.vars[m.t(e)] = Variable{VarFamily::t, false, 0.0, kInf, 0.0, false};
  for (int k = 0; k < K; ++k)
    for (int e = 0; e < E; ++e)
      m.vars[m.chi(k, e)] = Variable{VarFamily::chi, false, 0.0, kInf, inst.alpha, false};
  m.objective_constant = inst.beta * K * n_t;

  auto& rows = m.rows;
  for (int k = 0; k < K; ++k) {
    Row r{RowFamily::one_host, {}, Sense::le, 1.0};
    for (int e = 0; e < E; ++e) r.terms.push_back({m.x(k, e), 1.0});
    rows.push_back(std::move(r));
  }
  for (int e = 0; e < E; ++e) {
    Row r{RowFamily::storage, {}, Sense::le, (1.0 - opts.epsilon_cap) * inst.ec_capacity[e]};
    for (int k = 0; k < K; ++k) r.terms.push_back({m.x(k, e), inst.flows[k].storage});
    rows.push_back(std::move(r));
  }
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < A; ++a) {
      Row r{RowFamily::one_route, {}, Sense::le, 1.0};
      for (int e = 0; e < E; ++e) r.terms.push_back({m.z(k, a, e), 1.0});
      rows.push_back(std::move(r));
    }
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < A; ++a)
      for (int e = 0; e < E; ++e)
        rows.push_back({RowFamily::route_needs_host, {{m.z(k, a, e), 1.0}, {m.x(k, e), -1.0}}, Sense::le, 0.0});
  for (int l = 0; l < L; ++l) {
    Row r{RowFamily::link_capacity, {}, Sense::le, inst.link_capacity[l]};
    for (int k = 0; k < K; ++k) r.terms.push_back({m.y(k, l), inst.flows[k].bandwidth});
    rows.push_back(std::move(r));
  }
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) {
      Row upper{RowFamily::link_use_upper, {{m.y(k, l), 1.0}}, Sense::le, 0.0};
      Row lower{RowFamily::link_use_lower, {{m.y(k, l), m.big_m_path}}, Sense::ge, 0.0};
      for (int a = 0; a < A; ++a)
        for (int e = 0; e < E; ++e)
          if (pt.on_path(l, a, e)) {
            upper.terms.push_back({m.z(k, a, e), -1.0});
            lower.terms.push_back({m.z(k, a, e), -1.0});
          }
      rows.push_back(std::move(upper));
      rows.push_back(std::move(lower));
    }
  for (int e = 0; e < E; ++e) {
    Row r{RowFamily::utilization, {{m.t(e), 1.0}}, Sense::eq, 1.0};
    for (int k = 0; k < K; ++k) r.terms.push_back({m.chi(k, e), -inst.storage_ratio(k, e)});
    rows.push_back(std::move(r));
  }
  // Largest t_e = 1 / (1 - U_e) reachable when at most `storage` MB can land on e.
  auto t_cap = [&](int e, double storage) {
    const double u = std::min((1.0 - opts.epsilon_cap) * inst.ec_capacity[e], storage) / inst.ec_capacity[e];
    return std::min(1.0 / (1.0 - u), big_m);
  };
  std::vector<double> total_storage(E, 0.0), t_max(E, 0.0);
  for (int e = 0; e < E; ++e) {
    for (int k = 0; k < K; ++k) total_storage[e] += inst.flows[k].storage;
    t_max[e] = t_cap(e, total_storage[e]);
    if (opts.strengthen) rows.push_back({RowFamily::t_cap, {{m.t(e), 1.0}}, Sense::le, t_max[e]});
  }
  for (int k = 0; k < K; ++k)
    for (int e = 0; e < E; ++e) {
      rows.push_back({RowFamily::chi_below_t, {{m.chi(k, e), 1.0}, {m.t(e), -1.0}}, Sense::le, 0.0});
      rows.push_back({RowFamily::chi_below_x, {{m.chi(k, e), 1.0}, {m.x(k, e), -big_m}}, Sense::le, 0.0});
      rows.push_back({RowFamily::chi_above,
                      {{m.chi(k, e), 1.0}, {m.x(k, e), -big_m}, {m.t(e), -1.0}},
                      Sense::ge,
                      -big_m});
      if (opts.strengthen) {
        // Hosting k alone already gives t_e >= 1 / (1 - q_ke).
        const double q = inst.storage_ratio(k, e);
        const double floor = q < 1.0 ? std::min(1.0 / (1.0 - q), big_m) : big_m;
        rows.push_back({RowFamily::chi_floor, {{m.chi(k, e), 1.0}, {m.x(k, e), -floor}}, Sense::ge, 0.0});
        // t_e is capped by the storage the other flows can fill.
        const double others = t_cap(e, total_storage[e] - inst.flows[k].storage);
        rows.push_back({RowFamily::chi_tight_above,
                        {{m.chi(k, e), 1.0}, {m.x(k, e), -others}, {m.t(e), -1.0}},
                        Sense::ge,
                        -others});
        rows.push_back({RowFamily::chi_tight_below, {{m.chi(k, e), 1.0}, {m.x(k, e), -t_max[e]}}, Sense::le, 0.0});
      }
    }
  return m;
}

MilpModel apply_reduction(const MilpModel& m, const PredictionMatrix& o) {
  if (o.flows != m.dims.flows || o.edge_clouds != m.dims.edge_clouds ||
      o.allowed.size() != static_cast<std::size_t>(o.flows) * o.edge_clouds)
    throw Error(ErrorCode::dimension_mismatch, "prediction matrix does not match model");
  MilpModel out = m;
  auto eliminate = [&](int j) {
    auto& v = out.vars[j];
    v.eliminated = true;
    v.lower = 0.0;
    v.upper = 0.0;
  };
  for (int k = 0; k < m.dims.flows; ++k)
    for (int e = 0; e < m.dims.edge_clouds; ++e) {
      if (o.at(k, e)) continue;
      eliminate(out.x(k, e));
      eliminate(out.chi(k, e));
      for (int a = 0; a < m.dims.access_routers; ++a) eliminate(out.z(k, a, e));
    }
  return out;
}

VariableCount count_variables(const MilpModel& m) {
  VariableCount c;
  for (const auto& v : m.vars) {
    if (v.eliminated) continue;
    ++c.total;
    switch (v.family) {
      case VarFamily::x: ++c.x; break;
      case VarFamily::y: ++c.y; break;
      case VarFamily::z: ++c.z; break;
      case VarFamily::t: ++c.t; break;
      case VarFamily::chi: ++c.chi; break;
    }
  }
  return c;
}

std::vector<double> complete_assignment(const MilpModel& m, const Instance& inst, const PathTables& pt,
                                        const std::vector<std::uint8_t>& x,
                                        const std::vector<std::uint8_t>& z) {
  const int K = m.dims.flows, A = m.dims.access_routers, E = m.dims.edge_clouds, L = m.dims.links;
  if (x.size() != static_cast<std::size_t>(K) * E || z.size() != static_cast<std::size_t>(K) * A * E)
    throw Error(ErrorCode::dimension_mismatch, "assignment does not match model");
  std::vector<double> v(m.vars.size(), 0.0);
  for (int k = 0; k < K; ++k)
    for (int e = 0; e < E; ++e) v[m.x(k, e)] = x[k * E + e] ? 1.0 : 0.0;
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < A; ++a)
      for (int e = 0; e < E; ++e) v[m.z(k, a, e)] = z[(k * A + a) * E + e] ? 1.0 : 0.0;
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l) {
      bool used = false;
      for (int a = 0; a < A && !used; ++a)
        for (int e = 0; e < E && !used; ++e) used = pt.on_path(l, a, e) && z[(k * A + a) * E + e];
      v[m.y(k, l)] = used ? 1.0 : 0.0;
    }
  for (int e = 0; e < E; ++e) {
    double util = 0.0;
    for (int k = 0; k < K; ++k)
      if (x[k * E + e]) util += inst.storage_ratio(k, e);
    const double t = util < 1.0 - 1.0 / m.big_m_chi ? 1.0 / (1.0 - util) : m.big_m_chi;
    v[m.t(e)] = t;
    for (int k = 0; k < K; ++k) v[m.chi(k, e)] = x[k * E + e] ? t : 0.0;
  }
  return v;
}

void write_lp_format(const MilpModel& m, std::ostream& out) {
  auto term = [&](double coef, int j) {
    out << (coef < 0 ? " - " : " + ") << std::abs(coef) << ' ' << var_name(m, j);
  };
  out.precision(17);
  out << "\\ objective constant " << m.objective_constant << "\nMinimize\n obj:";
  for (int j = 0; j < m.num_vars(); ++j)
    if (m.vars[j].cost != 0.0 && !m.vars[j].eliminated) term(m.vars[j].cost, j);
  out << "\nSubject To\n";
  for (int i = 0; i < m.num_rows(); ++i) {
    const auto& r = m.rows[i];
    out << ' ' << to_string(r.family) << '_' << i << ':';
    bool any = false;
    for (const auto& t : r.terms)
      if (!m.vars[t.var].eliminated) {
        term(t.coef, t.var);
        any = true;
      }
    if (!any) out << " 0 " << var_name(m, m.t(0));  // keeps the row syntactically valid
    out << (r.sense == Sense::le ? " <= " : r.sense == Sense::ge ? " >= " : " = ") << r.rhs << '\n';
  }
  out << "Bounds\n";
  for (int j = 0; j < m.num_vars(); ++j) {
    const auto& v = m.vars[j];
    if (v.eliminated) {
      out << ' ' << var_name(m, j) << " = 0\n";
    } else if (!v.integer) {
      out << ' ' << v.lower << " <= " << var_name(m, j) << (std::isinf(v.upper) ? " <= +inf" : " <= ")
          << (std::isinf(v.upper) ? std::string() : std::to_string(v.upper)) << '\n';
    }
  }
  out << "Binaries\n";
  for (int j = 0; j < m.num_vars(); ++j)
    if (m.vars[j].integer && !m.vars[j].eliminated) out << ' ' << var_name(m, j) << '\n';
  out << "End\n";
}

}  // namespace edgecache
