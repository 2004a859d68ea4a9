#pragma once

#include <cstdint>
#include <vector>

#include "edgecache/model.hpp"

namespace edgecache::lp {

enum class Status { optimal, infeasible, unbounded, numerical, iteration_limit };

std::string_view to_string(Status s);

/// min c^T x subject to sparse rows and lower <= x <= upper.
struct Problem {
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::vector<Term>> rows;
  std::vector<Sense> sense;
  std::vector<double> rhs;

  int num_cols() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
};

/// Bounded-variable dual simplex on a dense tableau B^-1 [A | I].
///
/// Every row gets a logical column, so the starting basis is the identity and
/// is dual feasible once each nonbasic column sits at the bound its cost
/// points to. Columns whose cost points at an infinite bound get a temporary
/// box; finishing on such a box reports `unbounded`.
///
/// Bounds may be changed between solves. The current basis stays dual
/// feasible under any bound change, so re-solving after branching only runs
/// the dual iterations needed to repair primal feasibility.
class DualSimplex {
 public:
  explicit DualSimplex(const Problem& p);

  void set_bounds(int col, double lower, double upper);
  double lower(int col) const { return lower_[col]; }
  double upper(int col) const { return upper_[col]; }

  Status solve();

  /// c^T x at the current basis.
  double objective() const;
  /// Structural column values.
  std::vector<double> primal() const;
  long iterations() const { return iterations_; }
  int refactorizations() const { return refactorizations_; }

  /// Rebuilds the tableau from the original matrix for the current basis.
  /// Returns false when the basis matrix is singular.
  bool refactor();

  // Tunables.
  double pivot_tolerance = 1e-7;
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  long max_iterations_per_solve = 200000;
  int refactor_interval = 4000;
  int degenerate_switch = 50;

 private:
  enum class At : std::uint8_t { basic, lower, upper, zero };

  double& cell(int i, int j) { return tableau_[static_cast<std::size_t>(i) * width_ + j]; }
  double cell(int i, int j) const { return tableau_[static_cast<std::size_t>(i) * width_ + j]; }

  void place_nonbasic(int j);
  void load_slack_basis();
  double nonbasic_value(int j) const;
  void recompute_basic_values();
  void recompute_reduced_costs();
  void pivot(int row, int col);
  int choose_leaving(bool bland) const;
  int choose_entering(int row, bool to_lower, bool bland) const;
  bool residual_ok() const;
  bool certify_infeasible(int row) const;
  void restore_dual_feasibility();

  int m_ = 0;       // rows
  int n_ = 0;       // structural columns
  int width_ = 0;   // n_ + m_
  std::vector<double> tableau_;  // m_ x width_
  std::vector<double> rhs_col_;  // B^-1 b
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> box_lower_;  // bounds actually used, incl. temporary boxes
  std::vector<double> box_upper_;
  std::vector<double> value_;
  std::vector<double> reduced_;
  std::vector<int> basis_;     // row -> column
  std::vector<int> position_;  // column -> row or -1
  std::vector<At> at_;
  std::vector<double> b_;
  std::vector<std::vector<Term>> columns_;  // sparse A by column (structurals only)
  long iterations_ = 0;
  long pivots_since_refactor_ = 0;
  int refactorizations_ = 0;
  std::vector<int> scratch_nz_;
};

/// LP view of a MilpModel: eliminated variables are dropped and empty rows
/// are checked once and removed.
struct ModelLp {
  Problem problem;
  std::vector<int> column_of_var;  // model var -> LP column or -1
  std::vector<int> var_of_column;
  bool trivially_infeasible = false;
};

ModelLp make_model_lp(const MilpModel& m);

}  // namespace edgecache::lp
