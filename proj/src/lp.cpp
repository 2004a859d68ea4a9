#include "edgecache/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "edgecache/error.hpp"

namespace edgecache::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Temporary box for columns whose cost points at an infinite bound.
constexpr double kBigBox = 1e7;
constexpr double kDrop = 1e-14;

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical: return "numerical";
    case Status::iteration_limit: return "iteration-limit";
  }
  return "?";
}

DualSimplex::DualSimplex(const Problem& p) {
  m_ = p.num_rows();
  n_ = p.num_cols();
  width_ = n_ + m_;
  tableau_.assign(static_cast<std::size_t>(m_) * width_, 0.0);
  columns_.assign(n_, {});
  for (int i = 0; i < m_; ++i)
    for (const auto& t : p.rows[i]) columns_[t.var].push_back({i, t.coef});
  b_ = p.rhs;

  cost_.assign(width_, 0.0);
  std::copy(p.cost.begin(), p.cost.end(), cost_.begin());
  lower_.assign(width_, 0.0);
  upper_.assign(width_, 0.0);
  for (int j = 0; j < n_; ++j) {
    lower_[j] = p.lower[j];
    upper_[j] = p.upper[j];
  }
  for (int i = 0; i < m_; ++i) {
    switch (p.sense[i]) {
      case Sense::le: lower_[n_ + i] = 0.0; upper_[n_ + i] = kInf; break;
      case Sense::ge: lower_[n_ + i] = -kInf; upper_[n_ + i] = 0.0; break;
      case Sense::eq: lower_[n_ + i] = 0.0; upper_[n_ + i] = 0.0; break;
    }
  }
  at_.assign(width_, At::lower);
  load_slack_basis();
}

void DualSimplex::load_slack_basis() {
  std::fill(tableau_.begin(), tableau_.end(), 0.0);
  for (int j = 0; j < n_; ++j)
    for (const auto& t : columns_[j]) cell(t.var, j) += t.coef;
  for (int i = 0; i < m_; ++i) cell(i, n_ + i) = 1.0;
  rhs_col_ = b_;
  box_lower_ = lower_;
  box_upper_ = upper_;
  basis_.resize(m_);
  position_.assign(width_, -1);
  for (int i = 0; i < m_; ++i) {
    basis_[i] = n_ + i;
    position_[n_ + i] = i;
    at_[n_ + i] = At::basic;
  }
  reduced_ = cost_;
  value_.assign(width_, 0.0);
  for (int j = 0; j < n_; ++j) {
    place_nonbasic(j);
    value_[j] = nonbasic_value(j);
  }
  recompute_basic_values();
  pivots_since_refactor_ = 0;
}

void DualSimplex::place_nonbasic(int j) {
  const double lo = lower_[j], hi = upper_[j];
  box_lower_[j] = lo;
  box_upper_[j] = hi;
  const double d = reduced_[j];
  if (lo == hi) {
    at_[j] = At::lower;
  } else if (d > dual_tolerance) {
    if (std::isinf(lo)) box_lower_[j] = std::min(-kBigBox, hi - kBigBox);
    at_[j] = At::lower;
  } else if (d < -dual_tolerance) {
    if (std::isinf(hi)) box_upper_[j] = std::max(kBigBox, lo + kBigBox);
    at_[j] = At::upper;
  } else if (at_[j] == At::upper && !std::isinf(hi)) {
    at_[j] = At::upper;
  } else if (!std::isinf(lo)) {
    at_[j] = At::lower;
  } else if (!std::isinf(hi)) {
    at_[j] = At::upper;
  } else {
    at_[j] = At::zero;
  }
}

double DualSimplex::nonbasic_value(int j) const {
  switch (at_[j]) {
    case At::lower: return box_lower_[j];
    case At::upper: return box_upper_[j];
    default: return 0.0;
  }
}

void DualSimplex::set_bounds(int col, double lower, double upper) {
  lower_[col] = lower;
  upper_[col] = upper;
  if (position_[col] >= 0) {
    box_lower_[col] = lower;
    box_upper_[col] = upper;
    return;
  }
  const double old = value_[col];
  place_nonbasic(col);
  const double now = nonbasic_value(col);
  if (now != old) {
    const double delta = now - old;
    for (int i = 0; i < m_; ++i) {
      const double a = cell(i, col);
      if (a != 0.0) value_[basis_[i]] -= a * delta;
    }
    value_[col] = now;
  }
}

void DualSimplex::recompute_basic_values() {
  std::vector<int> moved;
  for (int j = 0; j < width_; ++j)
    if (position_[j] < 0 && value_[j] != 0.0) moved.push_back(j);
  for (int i = 0; i < m_; ++i) {
    double v = rhs_col_[i];
    const double* row = &tableau_[static_cast<std::size_t>(i) * width_];
    for (int j : moved) v -= row[j] * value_[j];
    value_[basis_[i]] = v;
  }
}

void DualSimplex::recompute_reduced_costs() {
  reduced_ = cost_;
  for (int i = 0; i < m_; ++i) {
    const double cb = cost_[basis_[i]];
    if (cb == 0.0) continue;
    const double* row = &tableau_[static_cast<std::size_t>(i) * width_];
    for (int j = 0; j < width_; ++j) reduced_[j] -= cb * row[j];
  }
  for (int i = 0; i < m_; ++i) reduced_[basis_[i]] = 0.0;
}

void DualSimplex::restore_dual_feasibility() {
  for (int j = 0; j < width_; ++j) {
    if (position_[j] >= 0) continue;
    const bool wrong = (at_[j] == At::lower && reduced_[j] < -dual_tolerance && lower_[j] != upper_[j]) ||
                       (at_[j] == At::upper && reduced_[j] > dual_tolerance && lower_[j] != upper_[j]);
    if (wrong) {
      place_nonbasic(j);
      value_[j] = nonbasic_value(j);
    }
  }
}

double DualSimplex::objective() const {
  double sum = 0.0;
  for (int j = 0; j < n_; ++j) sum += cost_[j] * value_[j];
  return sum;
}

std::vector<double> DualSimplex::primal() const {
  return std::vector<double>(value_.begin(), value_.begin() + n_);
}

int DualSimplex::choose_leaving(bool bland) const {
  int best = -1;
  double best_violation = 0.0;
  int best_col = width_;
  for (int i = 0; i < m_; ++i) {
    const int j = basis_[i];
    const double v = value_[j];
    double violation = 0.0;
    if (v < lower_[j]) violation = lower_[j] - v;
    else if (v > upper_[j]) violation = v - upper_[j];
    const double bound = v < lower_[j] ? lower_[j] : upper_[j];
    if (violation <= primal_tolerance * (1.0 + std::abs(bound))) continue;
    if (bland) {
      if (j < best_col) {
        best_col = j;
        best = i;
      }
    } else if (violation > best_violation) {
      best_violation = violation;
      best = i;
    }
  }
  return best;
}

int DualSimplex::choose_entering(int row, bool increase, bool bland) const {
  const double* r = &tableau_[static_cast<std::size_t>(row) * width_];
  // Candidate test and the dual step each column allows.
  auto ratio_of = [&](int j, double& ratio) {
    if (position_[j] >= 0 || lower_[j] == upper_[j]) return false;
    const double a = r[j];
    if (std::abs(a) <= pivot_tolerance) return false;
    const At at = at_[j];
    bool ok;
    if (at == At::zero) ok = true;
    else if (increase) ok = (at == At::lower && a < 0) || (at == At::upper && a > 0);
    else ok = (at == At::lower && a > 0) || (at == At::upper && a < 0);
    if (!ok) return false;
    double d = reduced_[j];
    if (at == At::lower) d = std::max(d, 0.0);
    else if (at == At::upper) d = std::min(d, 0.0);
    ratio = std::abs(d) / std::abs(a);
    return true;
  };

  if (bland) {
    int best = -1;
    double best_ratio = kInf;
    for (int j = 0; j < width_; ++j) {
      double ratio;
      if (!ratio_of(j, ratio)) continue;
      if (ratio < best_ratio - 1e-12) {
        best_ratio = ratio;
        best = j;
      }
    }
    return best;
  }

  // Harris two-pass ratio test: the largest pivot among near-minimal ratios.
  double bound = kInf;
  for (int j = 0; j < width_; ++j) {
    double ratio;
    if (!ratio_of(j, ratio)) continue;
    bound = std::min(bound, ratio + dual_tolerance / std::abs(r[j]));
  }
  if (std::isinf(bound)) return -1;
  int best = -1;
  double best_pivot = 0.0;
  for (int j = 0; j < width_; ++j) {
    double ratio;
    if (!ratio_of(j, ratio) || ratio > bound) continue;
    if (std::abs(r[j]) > best_pivot) {
      best_pivot = std::abs(r[j]);
      best = j;
    }
  }
  return best;
}

void DualSimplex::pivot(int row, int col) {
  double* pr = &tableau_[static_cast<std::size_t>(row) * width_];
  const double alpha = pr[col];
  scratch_nz_.clear();
  for (int j = 0; j < width_; ++j) {
    if (pr[j] == 0.0) continue;
    pr[j] /= alpha;
    if (std::abs(pr[j]) < kDrop) pr[j] = 0.0;
    else scratch_nz_.push_back(j);
  }
  pr[col] = 1.0;
  rhs_col_[row] /= alpha;

  for (int i = 0; i < m_; ++i) {
    if (i == row) continue;
    double* pi = &tableau_[static_cast<std::size_t>(i) * width_];
    const double f = pi[col];
    if (f == 0.0) continue;
    for (int j : scratch_nz_) {
      const double v = pi[j] - f * pr[j];
      pi[j] = std::abs(v) < kDrop ? 0.0 : v;
    }
    pi[col] = 0.0;
    rhs_col_[i] -= f * rhs_col_[row];
  }

  const double f = reduced_[col];
  if (f != 0.0)
    for (int j : scratch_nz_) reduced_[j] -= f * pr[j];
  reduced_[col] = 0.0;

  const int leaving = basis_[row];
  position_[leaving] = -1;
  basis_[row] = col;
  position_[col] = row;
  at_[col] = At::basic;
  box_lower_[col] = lower_[col];
  box_upper_[col] = upper_[col];
  ++pivots_since_refactor_;
}

bool DualSimplex::residual_ok() const {
  std::vector<double> lhs(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    if (value_[j] == 0.0) continue;
    for (const auto& t : columns_[j]) lhs[t.var] += t.coef * value_[j];
  }
  for (int i = 0; i < m_; ++i) {
    const double res = lhs[i] + value_[n_ + i] - b_[i];
    if (std::abs(res) > 1e-7 * (1.0 + std::abs(b_[i]))) return false;
  }
  return true;
}

bool DualSimplex::refactor() {
  Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(m_, m_);
  for (int i = 0; i < m_; ++i) {
    const int col = basis_[i];
    if (col < n_) {
      for (const auto& t : columns_[col]) basis_matrix(t.var, i) = t.coef;
    } else {
      basis_matrix(col - n_, i) = 1.0;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
  if (!(lu.rcond() > 1e-12)) return false;

  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m_, width_ + 1);
  for (int j = 0; j < n_; ++j)
    for (const auto& t : columns_[j]) full(t.var, j) = t.coef;
  for (int i = 0; i < m_; ++i) {
    full(i, n_ + i) = 1.0;
    full(i, width_) = b_[i];
  }
  const Eigen::MatrixXd solved = lu.solve(full);
  if (!solved.allFinite()) return false;
  for (int i = 0; i < m_; ++i) {
    for (int j = 0; j < width_; ++j) {
      const double v = solved(i, j);
      cell(i, j) = std::abs(v) < kDrop ? 0.0 : v;
    }
    rhs_col_[i] = solved(i, width_);
  }
  for (int i = 0; i < m_; ++i) {
    for (int k = 0; k < m_; ++k) cell(k, basis_[i]) = 0.0;
    cell(i, basis_[i]) = 1.0;
  }
  recompute_reduced_costs();
  restore_dual_feasibility();
  recompute_basic_values();
  pivots_since_refactor_ = 0;
  ++refactorizations_;
  return true;
}

bool DualSimplex::certify_infeasible(int row) const {
  // Row `row` of B^-1 combines the original rows into sum_j g_j x_j = rho^T b,
  // which must be unsatisfiable over the column bounds.
  const double* rho = &tableau_[static_cast<std::size_t>(row) * width_ + n_];
  double target = 0.0;
  for (int i = 0; i < m_; ++i) target += rho[i] * b_[i];
  double lo = 0.0, hi = 0.0, scale = std::abs(target);
  auto accumulate = [&](double g, int j) {
    if (std::abs(g) < 1e-11) return;
    const double a = g > 0 ? lower_[j] : upper_[j];
    const double b = g > 0 ? upper_[j] : lower_[j];
    lo += g * a;
    hi += g * b;
    if (std::isfinite(a)) scale += std::abs(g * a);
    if (std::isfinite(b)) scale += std::abs(g * b);
  };
  for (int j = 0; j < n_; ++j) {
    double g = 0.0;
    for (const auto& t : columns_[j]) g += rho[t.var] * t.coef;
    accumulate(g, j);
  }
  for (int i = 0; i < m_; ++i) accumulate(rho[i], n_ + i);
  const double tol = 1e-9 * (1.0 + scale);
  return target < lo - tol || target > hi + tol;
}

Status DualSimplex::solve() {
  long local = 0;
  int degenerate_run = 0;
  bool refactored = false;
  bool restarted = false;
  // First trouble: refactor. Second: restart from the slack basis. Third: give up.
  auto recover = [&] {
    if (!refactored) {
      refactored = true;
      if (refactor()) return true;
    }
    if (restarted) return false;
    restarted = true;
    load_slack_basis();
    return true;
  };
  while (true) {
    if (local >= max_iterations_per_solve) return Status::iteration_limit;
    if (pivots_since_refactor_ >= refactor_interval) {
      if (!refactor()) load_slack_basis();
    }
    if (local > 0 && local % 100 == 0) recompute_basic_values();

    const bool bland = degenerate_run > degenerate_switch;
    int row = choose_leaving(bland);
    if (row < 0) {
      recompute_basic_values();
      row = choose_leaving(bland);
      if (row < 0) {
        if (!residual_ok()) {
          if (!recover()) return Status::numerical;
          continue;
        }
        for (int j = 0; j < width_; ++j) {
          if (position_[j] >= 0) continue;
          if ((at_[j] == At::lower && box_lower_[j] != lower_[j]) ||
              (at_[j] == At::upper && box_upper_[j] != upper_[j]))
            return Status::unbounded;
        }
        return Status::optimal;
      }
    }

    const int leaving = basis_[row];
    const bool increase = value_[leaving] < lower_[leaving];
    const int entering = choose_entering(row, increase, bland);
    if (entering < 0) {
      if (certify_infeasible(row)) return Status::infeasible;
      if (!recover()) return Status::numerical;
      continue;
    }

    const double alpha = cell(row, entering);
    const double target = increase ? lower_[leaving] : upper_[leaving];
    const double step = (value_[leaving] - target) / alpha;
    const double dual_step = std::abs(reduced_[entering]);
    for (int i = 0; i < m_; ++i) {
      const double a = cell(i, entering);
      if (a != 0.0) value_[basis_[i]] -= a * step;
    }
    value_[entering] += step;
    pivot(row, entering);
    value_[leaving] = target;
    at_[leaving] = increase ? At::lower : At::upper;
    if (lower_[leaving] == upper_[leaving]) at_[leaving] = At::lower;
    box_lower_[leaving] = lower_[leaving];
    box_upper_[leaving] = upper_[leaving];

    ++local;
    ++iterations_;
    degenerate_run = dual_step < 1e-12 ? degenerate_run + 1 : 0;
  }
}

ModelLp make_model_lp(const MilpModel& m) {
  ModelLp out;
  out.column_of_var.assign(m.num_vars(), -1);
  for (int j = 0; j < m.num_vars(); ++j) {
    if (m.vars[j].eliminated) continue;
    out.column_of_var[j] = static_cast<int>(out.var_of_column.size());
    out.var_of_column.push_back(j);
    out.problem.cost.push_back(m.vars[j].cost);
    out.problem.lower.push_back(m.vars[j].lower);
    out.problem.upper.push_back(m.vars[j].upper);
  }
  for (const auto& r : m.rows) {
    std::vector<Term> terms;
    for (const auto& t : r.terms) {
      const int c = out.column_of_var[t.var];
      if (c >= 0 && t.coef != 0.0) terms.push_back({c, t.coef});
    }
    if (terms.empty()) {
      // Eliminated variables are fixed at zero.
      const bool ok = r.sense == Sense::le ? 0.0 <= r.rhs + 1e-12
                      : r.sense == Sense::ge ? 0.0 >= r.rhs - 1e-12
                                             : std::abs(r.rhs) <= 1e-12;
      if (!ok) out.trivially_infeasible = true;
      continue;
    }
    out.problem.rows.push_back(std::move(terms));
    out.problem.sense.push_back(r.sense);
    out.problem.rhs.push_back(r.rhs);
  }
  return out;
}

}  // namespace edgecache::lp

