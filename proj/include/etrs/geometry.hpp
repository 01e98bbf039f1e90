#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "etrs/lp.hpp"
#include "etrs/types.hpp"

namespace etrs {

struct Polytope {
  Matrix h;
  Vector g;
};

struct BallSpec {
  double radius_sq = 1.0;
};

/// Outcome of the sphere-polytope test: either a common point of
/// { ||u||^2 = r } and { H u <= g }, or a certificate that none exists.
struct IntersectionWitness {
  std::optional<Vector> point;
  bool empty() const { return !point.has_value(); }
};

/// Null direction of the columns of H (H z = 0, ||z|| = 1) when they are
/// linearly dependent, nullopt when independent. Rank is read off singular
/// values under the relative rank_tol gate.
inline std::optional<Vector> column_dependence_check(const Matrix& h, const SolverConfig& cfg) {
  const int p = static_cast<int>(h.cols());
  if (h.rows() == 0 || h.lpNorm<Eigen::Infinity>() == 0.0) {
    Vector z = Vector::Zero(p);
    z[0] = 1.0;
    return z;
  }
  Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullV);
  const double gate =
      cfg.rank_tol * svd.singularValues()[0] * std::max(h.rows(), h.cols());
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > gate) ++rank;
  if (rank >= p) return std::nullopt;
  return svd.matrixV().col(p - 1).eval();
}

/// Recession probe for L = { H u <= g }: solves
///   f* = min e^T H u  s.t.  H u <= 0, ||u||_inf <= 1.
/// f* >= 0 certifies boundedness; otherwise the minimizing vertex is a
/// recession direction (H d <= 0, d != 0) and is returned. The anchor u0 is
/// the caller's feasible point; the direction is valid from any such point.
inline std::optional<Vector> boundedness_probe(const Matrix& h, const Vector& g,
                                               const Vector& u0, const SolverConfig& cfg) {
  (void)g;
  (void)u0;
  const Vector cost = h.transpose() * Vector::Ones(h.rows());
  const Vector zero = Vector::Zero(h.rows());
  const LpResult lp = lp_minimize(cost, h, zero, 1.0);
  if (lp.status != LpStatus::Optimal)
    throw EigenFailure("boundedness_probe: recession LP did not solve");
  if (lp.value >= -cfg.feas_tol) return std::nullopt;
  return lp.point;
}

/// All vertices of { H u <= g } as basic solutions of p-row subsets,
/// deduplicated, in deterministic subset order. Throws when C(m, p) exceeds
/// the enumeration budget. Meaningful when the polytope is bounded.
inline std::vector<Vector> enumerate_vertices(const Matrix& h, const Vector& g,
                                              const SolverConfig& cfg) {
  const int m = static_cast<int>(h.rows());
  const int p = static_cast<int>(h.cols());
  if (m < p) throw BudgetExceeded("enumerate_vertices: fewer rows than dimensions");

  double combos = 1.0;
  for (int i = 0; i < p; ++i) combos = combos * (m - i) / (i + 1);
  if (combos > static_cast<double>(cfg.max_vertex_enum))
    throw BudgetExceeded("enumerate_vertices: subset count exceeds budget");

  const double rowscale = std::max(1.0, h.lpNorm<Eigen::Infinity>());
  std::vector<Vector> verts;
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;

  auto advance = [&]() {
    int i = p - 1;
    while (i >= 0 && idx[i] == m - p + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
    return true;
  };

  do {
    Matrix hs(p, p);
    Vector gs(p);
    for (int i = 0; i < p; ++i) {
      hs.row(i) = h.row(idx[i]);
      gs[i] = g[idx[i]];
    }
    Eigen::FullPivLU<Matrix> lu(hs);
    lu.setThreshold(cfg.rank_tol * rowscale * p);
    if (lu.rank() < p) continue;
    const Vector v = lu.solve(gs);
    bool feas = true;
    for (int i = 0; i < m && feas; ++i)
      if (h.row(i).dot(v) > g[i] + cfg.feas_tol * std::max(1.0, std::abs(g[i]))) feas = false;
    if (!feas) continue;
    bool dup = false;
    for (const Vector& w : verts)
      if ((w - v).lpNorm<Eigen::Infinity>() <= 10.0 * cfg.feas_tol * std::max(1.0, v.norm())) {
        dup = true;
        break;
      }
    if (!dup) verts.push_back(v);
  } while (advance());
  return verts;
}

/// Point where the segment from a strict ball-interior point to an exterior
/// point crosses the sphere ||u||^2 = r: the larger root of the quadratic in
/// the segment parameter, in closed form.
inline Vector segment_sphere_crossing(const Vector& inside, const Vector& outside, double r) {
  const Vector delta = outside - inside;
  const double a = delta.squaredNorm();
  if (a == 0.0) throw ZeroDirection("segment_sphere_crossing: endpoints coincide");
  const double b = inside.dot(delta);
  const double c0 = inside.squaredNorm() - r;
  const double disc = b * b - a * c0;
  if (disc < 0.0) throw ZeroDirection("segment_sphere_crossing: segment misses sphere");
  const double sq = std::sqrt(disc);
  const double t = (b <= 0.0) ? (-b + sq) / a : -c0 / (b + sq);
  return inside + std::min(1.0, std::max(0.0, t)) * delta;
}

struct ConvexResult {
  bool feasible = false;
  double value = 0.0;
  Vector point;
  double kkt_residual = 0.0;
};

namespace detail {

// Least-squares solve of the saddle system
//   [ P + 2*lambda*I  Hs^T ] [u ]   [ -q ]
//   [ Hs               0   ] [nu] = [ gs ],
// rejecting inconsistent systems via the residual gate.
inline bool kkt_solve(const Matrix& p0, const Vector& q, const Matrix& hs, const Vector& gs,
                      double lambda, Vector* u, Vector* nu) {
  const int p = static_cast<int>(q.size());
  const int s = static_cast<int>(hs.rows());
  Matrix k = Matrix::Zero(p + s, p + s);
  k.topLeftCorner(p, p) = p0 + 2.0 * lambda * Matrix::Identity(p, p);
  if (s > 0) {
    k.topRightCorner(p, s) = hs.transpose();
    k.bottomLeftCorner(s, p) = hs;
  }
  Vector rhs(p + s);
  rhs.head(p) = -q;
  rhs.tail(s) = gs;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(k);
  const Vector z = cod.solve(rhs);
  const double res = (k * z - rhs).lpNorm<Eigen::Infinity>();
  const double scale = std::max({1.0, rhs.lpNorm<Eigen::Infinity>(), k.lpNorm<Eigen::Infinity>()});
  if (res > 1e-8 * scale) return false;
  *u = z.head(p);
  *nu = z.tail(s);
  return true;
}

}  // namespace detail

/// Exact global minimizer of the convex program
///   min (1/2) u^T P u + q^T u  s.t.  H u <= g  (and ||u||^2 <= ball if set)
/// with P positive semidefinite. Active sets are enumerated by increasing
/// cardinality; each candidate is certified by the full KKT conditions
/// (stationarity, primal/dual feasibility, complementarity), so the first
/// certified point is the optimum. The ball multiplier is located by a
/// monotone root-find on ||u(lambda)||^2. Reports Infeasible via the result;
/// throws UnboundedObjective when the objective has no certified minimum.
inline ConvexResult convex_minimize(const Matrix& p0, const Vector& q, const Matrix& h,
                                    const Vector& g, std::optional<BallSpec> ball,
                                    const SolverConfig& cfg) {
  const int p = static_cast<int>(q.size());
  const int m = static_cast<int>(h.rows());
  if (m > 30) throw BudgetExceeded("convex_minimize: too many constraint subsets");

  ConvexResult out;
  if (!ball) {
    if (m > 0) {
      const LpResult lp = lp_minimize(Vector::Zero(p), h, g);
      if (lp.status == LpStatus::Infeasible) return out;
    }
  } else if (m > 0) {
    const ConvexResult mn =
        convex_minimize(2.0 * Matrix::Identity(p, p), Vector::Zero(p), h, g, std::nullopt, cfg);
    if (!mn.feasible) return out;
    if (mn.value > ball->radius_sq + cfg.feas_tol * std::max(1.0, ball->radius_sq)) return out;
  }

  auto certify = [&](const Vector& u, const Vector& nu, const std::vector<int>& rows,
                     double lambda) -> bool {
    for (int i = 0; i < m; ++i)
      if (h.row(i).dot(u) > g[i] + cfg.feas_tol * std::max(1.0, std::abs(g[i]))) return false;
    if (ball && u.squaredNorm() > ball->radius_sq +
                    cfg.feas_tol * std::max(1.0, ball->radius_sq))
      return false;
    for (int i = 0; i < nu.size(); ++i)
      if (nu[i] < -cfg.feas_tol * std::max(1.0, nu.lpNorm<Eigen::Infinity>())) return false;
    Vector grad = p0 * u + q + 2.0 * lambda * u;
    for (std::size_t i = 0; i < rows.size(); ++i) grad += nu[i] * h.row(rows[i]).transpose();
    out.kkt_residual = grad.lpNorm<Eigen::Infinity>();
    return out.kkt_residual <= 1e-7 * std::max(1.0, q.lpNorm<Eigen::Infinity>() +
                                                        p0.lpNorm<Eigen::Infinity>());
  };

  std::vector<std::uint32_t> masks;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) masks.push_back(mask);
  std::sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
    const int ca = __builtin_popcount(a), cb = __builtin_popcount(b);
    return ca != cb ? ca < cb : a < b;
  });

  for (const std::uint32_t mask : masks) {
    std::vector<int> rows;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) rows.push_back(i);
    Matrix hs(rows.size(), p);
    Vector gs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      hs.row(i) = h.row(rows[i]);
      gs[i] = g[rows[i]];
    }

    Vector u, nu;
    if (detail::kkt_solve(p0, q, hs, gs, 0.0, &u, &nu) && certify(u, nu, rows, 0.0)) {
      out.feasible = true;
      out.point = u;
      out.value = 0.5 * u.dot(p0 * u) + q.dot(u);
      return out;
    }

    if (!ball) continue;
    const double r = ball->radius_sq;
    auto psi = [&](double lambda, Vector* uu, Vector* nn) -> std::optional<double> {
      if (!detail::kkt_solve(p0, q, hs, gs, lambda, uu, nn)) return std::nullopt;
      return uu->squaredNorm() - r;
    };
    double lam_hi = 1.0;
    bool have_hi = false;
    for (int it = 0; it < 80; ++it) {
      const auto v = psi(lam_hi, &u, &nu);
      if (!v) break;
      if (*v < 0.0) {
        have_hi = true;
        break;
      }
      lam_hi *= 2.0;
    }
    if (!have_hi) continue;
    double lam_lo = lam_hi;
    bool have_lo = false;
    for (int it = 0; it < 80; ++it) {
      lam_lo *= 0.5;
      if (lam_lo < 1e-18) break;
      const auto v = psi(lam_lo, &u, &nu);
      if (!v) break;
      if (*v > 0.0) {
        have_lo = true;
        break;
      }
    }
    if (!have_lo) continue;
    double lam = 0.5 * (lam_lo + lam_hi);
    for (int it = 0; it < 200; ++it) {
      const auto v = psi(lam, &u, &nu);
      if (!v) break;
      if (std::abs(*v) <= 0.1 * cfg.feas_tol * std::max(1.0, r)) break;
      (*v > 0.0 ? lam_lo : lam_hi) = lam;
      if (lam_hi - lam_lo <= 1e-16 * std::max(1.0, lam)) break;
      lam = 0.5 * (lam_lo + lam_hi);
    }
    if (psi(lam, &u, &nu) && certify(u, nu, rows, lam)) {
      out.feasible = true;
      out.point = u;
      out.value = 0.5 * u.dot(p0 * u) + q.dot(u);
      return out;
    }
  }
  throw UnboundedObjective("convex_minimize: no KKT-certified point");
}

/// Decides whether the sphere { ||u||^2 = r } meets L = { H u <= g } and
/// produces a common point when it does. Route: squared-distance test
/// between L and the ball (min-norm point of L), then the on-sphere check,
/// then for an interior common point a walk to the sphere along a column
/// null direction or a recession direction, and finally, for bounded L,
/// vertex enumeration with a segment crossing.
inline IntersectionWitness sphere_polytope_intersect(const Matrix& h, const Vector& g, double r,
                                                     const SolverConfig& cfg) {
  const int p = static_cast<int>(h.cols());
  const double rtol = cfg.feas_tol * std::max(1.0, r);
  IntersectionWitness out;

  Vector uhat = Vector::Zero(p);
  if (h.rows() > 0) {
    const ConvexResult mn = convex_minimize(2.0 * Matrix::Identity(p, p), Vector::Zero(p), h, g,
                                            std::nullopt, cfg);
    if (!mn.feasible) return out;
    uhat = mn.point;
    const double rho = uhat.norm();
    const double dist_sq = rho > std::sqrt(r) ? (rho - std::sqrt(r)) * (rho - std::sqrt(r)) : 0.0;
    if (dist_sq > cfg.feas_tol) return out;
  }

  if (std::abs(uhat.squaredNorm() - r) <= rtol) {
    out.point = uhat;
    return out;
  }
  if (uhat.squaredNorm() > r) {
    out.point = (std::sqrt(r) / uhat.norm()) * uhat;
    return out;
  }

  if (const auto z = column_dependence_check(h, cfg)) {
    const double beta = (std::sqrt(r) + uhat.norm() + 1.0) / z->norm();
    out.point = segment_sphere_crossing(uhat, uhat + beta * (*z), r);
    return out;
  }

  if (const auto dir = boundedness_probe(h, g, uhat, cfg)) {
    const double beta = (std::sqrt(r) + uhat.norm() + 1.0) / dir->norm();
    out.point = segment_sphere_crossing(uhat, uhat + beta * (*dir), r);
    return out;
  }

  const std::vector<Vector> verts = enumerate_vertices(h, g, cfg);
  for (const Vector& v : verts)
    if (std::abs(v.squaredNorm() - r) <= rtol) {
      out.point = v;
      return out;
    }
  for (const Vector& v : verts)
    if (v.squaredNorm() > r + rtol) {
      out.point = segment_sphere_crossing(uhat, v, r);
      return out;
    }
  return out;
}

}  // namespace etrs
