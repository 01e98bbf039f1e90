#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "etrs/geometry.hpp"
#include "etrs/model.hpp"
#include "etrs/types.hpp"

namespace etrs {

struct OracleResult {
  bool feasible = false;
  double value = std::numeric_limits<double>::infinity();
  Vector x;
  std::int64_t candidates = 0;
};

namespace detail {

inline double clamped(double v) {
  const double big = 1e300;
  return std::min(big, std::max(-big, v));
}

// Sum of squares secular form on a fixed-radius sphere, poles excluded by
// the caller's interval choice.
struct OracleSecular {
  const Vector& sigma;
  const Vector& d;
  double radius_sq;
  double dgate;

  double phi(double mu) const {
    double s = -radius_sq;
    for (int i = 0; i < sigma.size(); ++i) {
      if (std::abs(d[i]) <= dgate) continue;
      const double den = sigma[i] + mu;
      s += (d[i] / den) * (d[i] / den);
    }
    return clamped(s);
  }
  double dphi(double mu) const {
    double s = 0.0;
    for (int i = 0; i < sigma.size(); ++i) {
      if (std::abs(d[i]) <= dgate) continue;
      const double den = sigma[i] + mu;
      s += -2.0 * d[i] * d[i] / (den * den * den);
    }
    return clamped(s);
  }
};

inline double bisect_root(const OracleSecular& f, double lo, double hi) {
  double flo = f.phi(lo);
  for (int it = 0; it < 220; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f.phi(mid);
    if ((flo <= 0.0) == (fm <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// All real roots of phi on the pole-free intervals. phi tends to -radius_sq
// at both infinities and to +inf at each pole, and is strictly convex
// between consecutive poles, so the unbounded intervals hold one root each
// and every bounded interval holds at most two.
inline std::vector<double> secular_all_roots(const OracleSecular& f,
                                             const std::vector<double>& poles) {
  std::vector<double> roots;
  if (poles.empty()) return roots;
  const double span = std::max(1.0, std::abs(poles.front()) + std::abs(poles.back()));
  const double eps = 1e-13 * span;

  double lo = poles.front() - 1.0;
  for (int it = 0; f.phi(lo) > 0.0 && it < 200; ++it)
    lo = poles.front() - 2.0 * (poles.front() - lo);
  if (f.phi(lo) <= 0.0) roots.push_back(bisect_root(f, lo, poles.front() - eps));

  double hi = poles.back() + 1.0;
  for (int it = 0; f.phi(hi) > 0.0 && it < 200; ++it)
    hi = poles.back() + 2.0 * (hi - poles.back());
  if (f.phi(hi) <= 0.0) roots.push_back(bisect_root(f, poles.back() + eps, hi));

  for (std::size_t j = 0; j + 1 < poles.size(); ++j) {
    double a = poles[j] + eps, b = poles[j + 1] - eps;
    if (a >= b) continue;
    for (int it = 0; it < 220; ++it) {
      const double mid = 0.5 * (a + b);
      if (f.dphi(mid) < 0.0)
        a = mid;
      else
        b = mid;
    }
    const double mmin = 0.5 * (a + b);
    if (f.phi(mmin) > 0.0) continue;
    roots.push_back(bisect_root(f, poles[j] + eps, mmin));
    roots.push_back(bisect_root(f, mmin, poles[j + 1] - eps));
  }
  return roots;
}

struct SubspaceChart {
  bool consistent = false;
  Vector x0;  // min-norm particular solution
  Matrix nbasis;
};

inline SubspaceChart subspace_chart(const Matrix& aw, const Vector& bw, int n,
                                    const SolverConfig& cfg) {
  SubspaceChart ch;
  if (aw.rows() == 0) {
    ch.consistent = true;
    ch.x0 = Vector::Zero(n);
    ch.nbasis = Matrix::Identity(n, n);
    return ch;
  }
  Eigen::JacobiSVD<Matrix> svd(aw, Eigen::ComputeFullV | Eigen::ComputeThinU);
  svd.setThreshold(cfg.rank_tol);
  ch.x0 = svd.solve(bw);
  const double scale = std::max(1.0, bw.lpNorm<Eigen::Infinity>());
  if ((aw * ch.x0 - bw).lpNorm<Eigen::Infinity>() > 1e-8 * scale) return ch;
  ch.consistent = true;
  const int rank = static_cast<int>(svd.rank());
  ch.nbasis = svd.matrixV().rightCols(n - rank);
  return ch;
}

}  // namespace detail

/// Independent reference solver: enumerates every first-order candidate
/// (all active-set patterns, ball active or not, every secular root and
/// every eigenvalue-cluster solution family on the sphere), filters by
/// feasibility, and returns the best objective value. Exhaustive and slow;
/// guarded to small instances.
inline OracleResult kkt_enumerate(const ProblemInstance& raw, const SolverConfig& cfg) {
  const ProblemInstance inst = validate_instance(raw, cfg);
  const int n = inst.n, m = inst.m();
  if (n > 8 || m > 12)
    throw BudgetExceeded("kkt_enumerate: instance too large for enumeration");

  OracleResult out;
  auto consider = [&](const Vector& x) {
    ++out.candidates;
    if (x.squaredNorm() > inst.radius_sq * (1.0 + cfg.feas_tol) + cfg.feas_tol) return;
    for (int i = 0; i < m; ++i)
      if (inst.A.row(i).dot(x) > inst.b[i] + cfg.feas_tol * std::max(1.0, std::abs(inst.b[i])))
        return;
    const double v = objective_value(inst, x);
    if (!out.feasible || v < out.value) {
      out.feasible = true;
      out.value = v;
      out.x = x;
    }
  };

  const double dscale = std::max(1.0, inst.c.norm());
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> w;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) w.push_back(i);
    Matrix aw(w.size(), n);
    Vector bw(w.size());
    for (std::size_t r = 0; r < w.size(); ++r) {
      aw.row(r) = inst.A.row(w[r]);
      bw[r] = inst.b[w[r]];
    }

    // Ball inactive: stationarity of the Lagrangian in x plus the fixed
    // equalities, solved as one saddle system.
    {
      const int mw = static_cast<int>(w.size());
      Matrix kkt = Matrix::Zero(n + mw, n + mw);
      kkt.topLeftCorner(n, n) = inst.Q;
      kkt.topRightCorner(n, mw) = aw.transpose();
      kkt.bottomLeftCorner(mw, n) = aw;
      Vector rhs(n + mw);
      rhs.head(n) = -inst.c;
      rhs.tail(mw) = bw;
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
      const Vector sol = cod.solve(rhs);
      const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
      if ((kkt * sol - rhs).lpNorm<Eigen::Infinity>() <= 1e-7 * scale)
        consider(sol.head(n));
    }

    // Ball active: chart the equality subspace, then walk every stationary
    // point of the reduced sphere problem.
    const detail::SubspaceChart ch = detail::subspace_chart(aw, bw, n, cfg);
    if (!ch.consistent) continue;
    const double rsq = inst.radius_sq - ch.x0.squaredNorm();
    const int p = static_cast<int>(ch.nbasis.cols());
    if (rsq < -cfg.feas_tol) continue;
    if (p == 0 || rsq <= cfg.feas_tol) {
      if (std::abs(rsq) <= cfg.feas_tol) consider(ch.x0);
      continue;
    }

    const Matrix qt = ch.nbasis.transpose() * inst.Q * ch.nbasis;
    const Vector ct = ch.nbasis.transpose() * (inst.Q * ch.x0 + inst.c);
    Eigen::SelfAdjointEigenSolver<Matrix> es(qt);
    if (es.info() != Eigen::Success) throw EigenFailure("kkt_enumerate: eigensolver failed");
    const Vector sig = es.eigenvalues();
    const Vector dt = es.eigenvectors().transpose() * ct;
    const double dgate = 1e-13 * std::max(1.0, dscale);

    std::vector<double> poles;
    for (int i = 0; i < p; ++i) {
      if (std::abs(dt[i]) <= dgate) continue;
      const double pole = -sig[i];
      bool dup = false;
      for (const double q : poles)
        if (std::abs(q - pole) <= 1e-12 * std::max(1.0, std::abs(pole))) dup = true;
      if (!dup) poles.push_back(pole);
    }
    std::sort(poles.begin(), poles.end());

    const detail::OracleSecular sec{sig, dt, rsq, dgate};
    for (const double mu : detail::secular_all_roots(sec, poles)) {
      Vector v(p);
      for (int i = 0; i < p; ++i)
        v[i] = std::abs(dt[i]) <= dgate ? 0.0 : -dt[i] / (sig[i] + mu);
      consider(ch.x0 + ch.nbasis * (es.eigenvectors() * v));
    }
    // Solution families at pole-free eigenvalues: all components of the
    // cluster decoupled from ct, remaining coordinates forced, free mass on
    // the cluster sphere. Objective is constant on each family, so one
    // feasible representative suffices.
    for (int j = 0; j < p;) {
      int je = j + 1;
      const double cgate = cfg.cluster_tol * std::max(1.0, std::abs(sig[p - 1]));
      while (je < p && sig[je] - sig[j] <= cgate) ++je;
      bool clean = true;
      for (int i = j; i < je; ++i)
        if (std::abs(dt[i]) > dgate) clean = false;
      if (clean) {
        Vector base = Vector::Zero(p);
        double tail_sq = 0.0;
        bool ok = true;
        for (int i = 0; i < p && ok; ++i) {
          if (i >= j && i < je) continue;
          const double gap = sig[i] - sig[j];
          if (std::abs(gap) <= cgate) {
            if (std::abs(dt[i]) > dgate) ok = false;
            continue;
          }
          base[i] = -dt[i] / gap;
          tail_sq += base[i] * base[i];
        }
        const double fam_rsq = rsq - tail_sq;
        if (ok && fam_rsq > -cfg.feas_tol) {
          const Matrix dirs = ch.nbasis * es.eigenvectors().middleCols(j, je - j);
          const Vector xbase = ch.x0 + ch.nbasis * (es.eigenvectors() * base);
          if (fam_rsq <= cfg.feas_tol) {
            consider(xbase);
          } else {
            Matrix hh(m, je - j);
            Vector gg(m);
            for (int i = 0; i < m; ++i) {
              hh.row(i) = inst.A.row(i) * dirs;
              gg[i] = inst.b[i] - inst.A.row(i).dot(xbase);
            }
            const IntersectionWitness iw =
                sphere_polytope_intersect(hh, gg, fam_rsq, cfg);
            if (!iw.empty()) consider(xbase + dirs * (*iw.point));
          }
        }
      }
      j = je;
    }
  }

  return out;
}

/// Second cross-check: projected gradient descent from a dyadic lattice of
/// feasible starts, with exact Euclidean projection onto the feasible set.
/// Returns the best polished value; an upper bound on the optimum.
inline OracleResult grid_polish(const ProblemInstance& raw, int depth, const SolverConfig& cfg) {
  const ProblemInstance inst = validate_instance(raw, cfg);
  const int n = inst.n;
  if (n > 4) throw BudgetExceeded("grid_polish: dimension too large for a lattice");
  const int per_axis = (1 << depth) + 1;
  double total = 1.0;
  for (int i = 0; i < n; ++i) total *= per_axis;
  if (total > 100000.0) throw BudgetExceeded("grid_polish: lattice too large");

  OracleResult out;
  auto project = [&](const Vector& y) {
    return convex_minimize(Matrix::Identity(n, n), -y, inst.A, inst.b,
                           BallSpec{inst.radius_sq}, cfg);
  };
  const ConvexResult probe = project(Vector::Zero(n));
  if (!probe.feasible) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q);
  if (es.info() != Eigen::Success) throw EigenFailure("grid_polish: eigensolver failed");
  const double qnorm = es.eigenvalues().cwiseAbs().maxCoeff();
  const double step = 1.0 / (2.0 * qnorm + 1.0);

  std::vector<Vector> starts;
  std::vector<int> idx(n, 0);
  const double h = 2.0 / (per_axis - 1);
  for (;;) {
    Vector g(n);
    for (int i = 0; i < n; ++i) g[i] = -1.0 + h * idx[i];
    bool feas = g.squaredNorm() <= inst.radius_sq * (1.0 + cfg.feas_tol);
    for (int i = 0; i < inst.m() && feas; ++i)
      if (inst.A.row(i).dot(g) > inst.b[i] + cfg.feas_tol * std::max(1.0, std::abs(inst.b[i])))
        feas = false;
    if (feas) starts.push_back(g);
    int ax = 0;
    while (ax < n && ++idx[ax] == per_axis) idx[ax++] = 0;
    if (ax == n) break;
  }
  if (starts.empty()) starts.push_back(probe.point);
  std::sort(starts.begin(), starts.end(), [&](const Vector& a, const Vector& b) {
    return objective_value(inst, a) < objective_value(inst, b);
  });
  if (starts.size() > 24) starts.resize(24);

  for (const Vector& s0 : starts) {
    Vector x = project(s0).point;
    for (int it = 0; it < 150; ++it) {
      const Vector xn = project(x - step * (inst.Q * x + inst.c)).point;
      const double moved = (xn - x).norm();
      x = xn;
      if (moved <= 1e-13) break;
    }
    ++out.candidates;
    const double v = objective_value(inst, x);
    if (!out.feasible || v < out.value) {
      out.feasible = true;
      out.value = v;
      out.x = x;
    }
  }
  return out;
}

}  // namespace etrs
