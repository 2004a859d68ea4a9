#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "edgecache/scenario.hpp"
#include "edgecache/topology.hpp"

namespace edgecache {

enum class VarFamily { x, y, z, t, chi };
enum class Sense { le, ge, eq };

std::string_view to_string(VarFamily f);

/// Which constraint of the caching program a row implements.
enum class RowFamily {
  one_host,           // sum_e x_ke <= 1
  storage,            // sum_k s_k x_ke <= (1 - eps) w_e
  one_route,          // sum_e z_kae <= 1
  route_needs_host,   // z_kae <= x_ke
  link_capacity,      // sum_k b_k y_kl <= c_l
  link_use_upper,     // y_kl <= sum_ae B_lae z_kae
  link_use_lower,     // M y_kl >= sum_ae B_lae z_kae
  utilization,        // t_e - sum_k q_ke chi_ke = 1
  chi_below_t,        // chi_ke <= t_e
  chi_below_x,        // chi_ke <= M x_ke
  chi_above,          // chi_ke >= M (x_ke - 1) + t_e
  // Optional strengthening rows; T_e bounds t_e from the storage that fits on e.
  chi_floor,          // chi_ke >= x_ke / (1 - q_ke)
  chi_tight_above,    // chi_ke >= t_e - T_e^-k (1 - x_ke)
  chi_tight_below,    // chi_ke <= T_e x_ke
  t_cap,              // t_e <= T_e
};

std::string_view to_string(RowFamily f);

struct Variable {
  VarFamily family = VarFamily::x;
  bool integer = false;
  double lower = 0.0;
  double upper = 0.0;
  double cost = 0.0;
  // Removed by a learned reduction; fixed at zero and absent from counts.
  bool eliminated = false;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Row {
  RowFamily family = RowFamily::one_host;
  std::vector<Term> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

struct Dimensions {
  int flows = 0;
  int access_routers = 0;
  int edge_clouds = 0;
  int links = 0;
};

/// Linearized caching program. Variables are laid out family by family:
/// x[k][e], y[k][l], z[k][a][e], t[e], chi[k][e].
struct MilpModel {
  Dimensions dims;
  std::vector<Variable> vars;
  std::vector<Row> rows;
  double objective_constant = 0.0;
  double big_m_chi = 0.0;
  double big_m_path = 0.0;
  double epsilon_cap = 0.0;

  int x(int k, int e) const { return k * dims.edge_clouds + e; }
  int y(int k, int l) const { return offset_y() + k * dims.links + l; }
  int z(int k, int a, int e) const {
    return offset_z() + (k * dims.access_routers + a) * dims.edge_clouds + e;
  }
  int t(int e) const { return offset_t() + e; }
  int chi(int k, int e) const { return offset_chi() + k * dims.edge_clouds + e; }

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  /// c^T v + constant.
  double objective(const std::vector<double>& values) const;
  /// Largest violation of any row or bound at `values` (0 when feasible).
  double max_violation(const std::vector<double>& values) const;

 private:
  int offset_y() const { return dims.flows * dims.edge_clouds; }
  int offset_z() const { return offset_y() + dims.flows * dims.links; }
  int offset_t() const { return offset_z() + dims.flows * dims.access_routers * dims.edge_clouds; }
  int offset_chi() const { return offset_t() + dims.edge_clouds; }
};

struct ModelOptions {
  double epsilon_cap = 0.01;
  /// Adds valid rows that tighten the relaxation without new variables.
  bool strengthen = true;
};

/// Binary matrix O over (flow, EC); zeros forbid hosting.
struct PredictionMatrix {
  int flows = 0;
  int edge_clouds = 0;
  std::vector<std::uint8_t> allowed;  // [k * |E| + e]

  bool at(int k, int e) const { return allowed[k * edge_clouds + e] != 0; }
  static PredictionMatrix ones(int flows, int edge_clouds);
  static PredictionMatrix zeros(int flows, int edge_clouds);
};

MilpModel build_milp(const Instance& inst, const PathTables& pt, const ModelOptions& opts = {});

/// Adds x_ke <= o_ke by eliminating x_ke, chi_ke and every z_kae where o_ke = 0.
MilpModel apply_reduction(const MilpModel& m, const PredictionMatrix& o);

struct VariableCount {
  int total = 0;
  int x = 0;
  int y = 0;
  int z = 0;
  int t = 0;
  int chi = 0;
};

VariableCount count_variables(const MilpModel& m);

/// Closed-form count of the unreduced program.
int full_variable_count(const Dimensions& d);

/// Full variable vector for binary x ([k * |E| + e]) and z ([(k * |A| + a) * |E| + e]):
/// y follows the routed links, t_e = 1 / (1 - U_e) and chi = t * x.
/// Utilization at or above 1 - 1/M leaves t_e at the big-M cap.
std::vector<double> complete_assignment(const MilpModel& m, const Instance& inst,
                                        const PathTables& pt, const std::vector<std::uint8_t>& x,
                                        const std::vector<std::uint8_t>& z);

/// CPLEX-style LP text for cross-checking with external solvers.
void write_lp_format(const MilpModel& m, std::ostream& out);

}  // namespace edgecache
