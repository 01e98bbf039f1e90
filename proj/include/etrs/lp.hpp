#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "etrs/types.hpp"

namespace etrs {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Optimal;
  double value = 0.0;
  Vector point;
};

namespace detail {

// Two-phase dense simplex with Bland's rule on the tableau
//   min c^T x  s.t.  A x = b, x >= 0, b >= 0.
// Returns false on unbounded phase-2; basis[] maps rows to basic columns.
class SimplexTableau {
 public:
  SimplexTableau(const Matrix& a, const Vector& b) : t_(a.rows(), a.cols() + 1) {
    t_.leftCols(a.cols()) = a;
    t_.col(a.cols()) = b;
    basis_.assign(a.rows(), -1);
    dead_.assign(a.rows(), false);
  }

  // Rows proven linearly dependent after phase 1 are dropped from pivoting.
  void kill_row(int i) { dead_[i] = true; }
  bool dead(int i) const { return dead_[i]; }

  int rows() const { return static_cast<int>(t_.rows()); }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  double rhs(int i) const { return t_(i, cols()); }
  int basic(int i) const { return basis_[i]; }

  void set_basic(int row, int col) { basis_[row] = col; }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i < rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  // Runs simplex on the given cost vector restricted to allowed columns.
  // Returns false when an improving column has no blocking row.
  bool run(const Vector& cost, const std::vector<bool>& allowed, double tol) {
    Vector red = cost;
    for (int i = 0; i < rows(); ++i) {
      const int j = basis_[i];
      if (!dead_[i] && j >= 0 && cost[j] != 0.0)
        red -= cost[j] * t_.row(i).head(cols()).transpose();
    }
    for (int iter = 0;; ++iter) {
      if (iter > 20000) throw EigenFailure("simplex: iteration guard tripped");
      int enter = -1;
      for (int j = 0; j < cols(); ++j) {
        if (allowed[j] && red[j] < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < rows(); ++i) {
        if (dead_[i]) continue;
        if (t_(i, enter) > tol) {
          const double ratio = rhs(i) / t_(i, enter);
          if (leave < 0 || ratio < best - 1e-15 ||
              (std::abs(ratio - best) <= 1e-15 && basis_[i] < basis_[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;
      const double mult = red[enter];
      pivot(leave, enter);
      red -= mult * t_.row(leave).head(cols()).transpose();
      red[enter] = 0.0;
    }
  }

  Matrix t_;
  std::vector<int> basis_;
  std::vector<bool> dead_;
};

}  // namespace detail

/// Minimizes cost^T u over { H u <= g } with u free, optionally intersected
/// with the box ||u||_inf <= *box. Exact vertex simplex (Bland's rule);
/// Infeasible and Unbounded are reported as outcomes.
inline LpResult lp_minimize(const Vector& cost, const Matrix& h, const Vector& g,
                            std::optional<double> box = std::nullopt) {
  const int p = static_cast<int>(cost.size());
  const int m0 = static_cast<int>(h.rows());
  const int mt = m0 + (box ? 2 * p : 0);

  Matrix hh(mt, p);
  Vector gg(mt);
  if (m0 > 0) {
    hh.topRows(m0) = h;
    gg.head(m0) = g;
  }
  if (box) {
    hh.middleRows(m0, p) = Matrix::Identity(p, p);
    hh.middleRows(m0 + p, p) = -Matrix::Identity(p, p);
    gg.segment(m0, 2 * p).setConstant(*box);
  }

  const double scale = std::max({1.0, hh.size() ? hh.lpNorm<Eigen::Infinity>() : 0.0,
                                 gg.size() ? gg.lpNorm<Eigen::Infinity>() : 0.0,
                                 cost.lpNorm<Eigen::Infinity>()});
  const double tol = 1e-11 * scale;

  // Columns: u+ (p), u- (p), slacks (mt), then one artificial per flipped row.
  std::vector<int> art_rows;
  for (int i = 0; i < mt; ++i)
    if (gg[i] < 0.0) art_rows.push_back(i);
  const int na = static_cast<int>(art_rows.size());
  const int ncols = 2 * p + mt + na;

  Matrix a = Matrix::Zero(mt, ncols);
  Vector b(mt);
  for (int i = 0; i < mt; ++i) {
    const double sgn = gg[i] < 0.0 ? -1.0 : 1.0;
    a.row(i).head(p) = sgn * hh.row(i);
    a.row(i).segment(p, p) = -sgn * hh.row(i);
    a(i, 2 * p + i) = sgn;
    b[i] = sgn * gg[i];
  }
  for (int t = 0; t < na; ++t) a(art_rows[t], 2 * p + mt + t) = 1.0;

  detail::SimplexTableau tab(a, b);
  for (int i = 0; i < mt; ++i) tab.set_basic(i, 2 * p + i);
  for (int t = 0; t < na; ++t) tab.set_basic(art_rows[t], 2 * p + mt + t);

  LpResult out;
  if (na > 0) {
    Vector phase1 = Vector::Zero(ncols);
    for (int t = 0; t < na; ++t) phase1[2 * p + mt + t] = 1.0;
    std::vector<bool> all(ncols, true);
    tab.run(phase1, all, tol);
    double infeas = 0.0;
    for (int i = 0; i < mt; ++i)
      if (tab.basic(i) >= 2 * p + mt) infeas += tab.rhs(i);
    if (infeas > 1e-8 * std::max(1.0, scale)) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    for (int i = 0; i < mt; ++i) {
      if (tab.basic(i) < 2 * p + mt) continue;
      int col = -1;
      for (int j = 0; j < 2 * p + mt; ++j)
        if (std::abs(tab.t_(i, j)) > tol) {
          col = j;
          break;
        }
      if (col >= 0)
        tab.pivot(i, col);
      else
        tab.kill_row(i);
    }
  }

  Vector phase2 = Vector::Zero(ncols);
  phase2.head(p) = cost;
  phase2.segment(p, p) = -cost;
  std::vector<bool> allowed(ncols, true);
  for (int t = 0; t < na; ++t) allowed[2 * p + mt + t] = false;
  if (!tab.run(phase2, allowed, tol)) {
    out.status = LpStatus::Unbounded;
    return out;
  }

  Vector u = Vector::Zero(p);
  for (int i = 0; i < mt; ++i) {
    if (tab.dead(i)) continue;
    const int j = tab.basic(i);
    if (j >= 0 && j < p) u[j] += tab.rhs(i);
    if (j >= p && j < 2 * p) u[j - p] -= tab.rhs(i);
  }
  out.status = LpStatus::Optimal;
  out.point = u;
  out.value = cost.dot(u);
  return out;
}

}  // namespace etrs
