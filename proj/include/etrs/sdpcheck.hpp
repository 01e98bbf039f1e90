#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

#include "etrs/geometry.hpp"
#include "etrs/model.hpp"
#include "etrs/trs0.hpp"
#include "etrs/types.hpp"

namespace etrs {

struct ConditionReport {
  double lambda_min = 0.0;
  int null_dim = 0;    // multiplicity of lambda_min in Q
  int rank_a = 0;
  bool dc = false;     // null_dim >= rank_a + 1
  bool newdc = false;  // rank [Q - lambda_min I, a_1 ... a_m] <= n - 1
};

namespace detail {

inline int matrix_rank(const Matrix& m, double rank_tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector sv = svd.singularValues();
  if (sv[0] == 0.0) return 0;
  const double gate = rank_tol * sv[0] * std::max(m.rows(), m.cols());
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > gate) ++r;
  return r;
}

inline Matrix stacked_condition_matrix(const ProblemInstance& inst, double lambda_min) {
  Matrix s(inst.n, inst.n + inst.m());
  s.leftCols(inst.n) = inst.Q - lambda_min * Matrix::Identity(inst.n, inst.n);
  s.rightCols(inst.m()) = inst.A.transpose();
  return s;
}

}  // namespace detail

inline ConditionReport check_conditions(const ProblemInstance& raw, const SolverConfig& cfg) {
  const ProblemInstance inst = validate_instance(raw, cfg);
  const SpectralData sd = spectral_decompose(inst.Q, inst.c, cfg);
  ConditionReport out;
  out.lambda_min = sd.sigma[0];
  out.null_dim = sd.k;
  out.rank_a = detail::matrix_rank(inst.A, cfg.rank_tol);
  out.dc = out.null_dim >= out.rank_a + 1;
  out.newdc =
      detail::matrix_rank(detail::stacked_condition_matrix(inst, sd.sigma[0]),
                          cfg.rank_tol) <= inst.n - 1;
  if (out.dc) out.newdc = true;
  return out;
}

inline bool check_dc(const ProblemInstance& inst, const SolverConfig& cfg) {
  return check_conditions(inst, cfg).dc;
}

inline bool check_newdc(const ProblemInstance& inst, const SolverConfig& cfg) {
  return check_conditions(inst, cfg).newdc;
}

/// Solves the convex surrogate: Q is shifted by min(lambda_min, 0) to become
/// positive semidefinite and half the shift is added back as a constant, so
/// the surrogate agrees with the original objective on the unit sphere and
/// lower-bounds it inside the ball.
struct SurrogateResult {
  bool feasible = false;
  double value = 0.0;
  double shift = 0.0;
  Vector x;
};

inline SurrogateResult surrogate_solve(const ProblemInstance& raw, const SolverConfig& cfg) {
  const ProblemInstance inst = validate_instance(raw, cfg);
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q);
  if (es.info() != Eigen::Success)
    throw EigenFailure("surrogate_solve: eigendecomposition failed");
  SurrogateResult out;
  out.shift = std::min(es.eigenvalues()[0], 0.0);
  const Matrix qc =
      inst.Q - out.shift * Matrix::Identity(inst.n, inst.n);
  const ConvexResult cr =
      convex_minimize(qc, inst.c, inst.A, inst.b, BallSpec{inst.radius_sq}, cfg);
  if (!cr.feasible) return out;
  out.feasible = true;
  out.x = cr.point;
  out.value = 0.5 * cr.point.dot(qc * cr.point) + inst.c.dot(cr.point) +
              0.5 * out.shift * inst.radius_sq + inst.f0;
  return out;
}

/// Moves a strictly interior surrogate minimizer to the unit sphere along a
/// direction z with (Q - lambda_min I) z = 0 and A z = 0. Such z exists
/// whenever the stacked condition holds, and the surrogate objective is
/// constant along it, so the lifted point attains the surrogate value with
/// the original objective. Returns the input point unchanged when it is
/// already on the sphere.
inline std::optional<Vector> lift_to_sphere(const ProblemInstance& raw, const Vector& x,
                                            const SolverConfig& cfg) {
  const ProblemInstance inst = validate_instance(raw, cfg);
  const double nx = x.squaredNorm();
  if (nx >= inst.radius_sq * (1.0 - cfg.feas_tol)) return x;
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q);
  if (es.info() != Eigen::Success)
    throw EigenFailure("lift_to_sphere: eigendecomposition failed");
  const double lmin = es.eigenvalues()[0];
  const Matrix s = detail::stacked_condition_matrix(inst, lmin);
  Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeFullU);
  const Vector sv = svd.singularValues();
  const double gate =
      cfg.rank_tol * std::max(1.0, sv[0]) * std::max(s.rows(), s.cols());
  if (sv[inst.n - 1] > gate) return std::nullopt;
  const Vector z = svd.matrixU().col(inst.n - 1);
  const double t = x.dot(z);
  const double disc = t * t + (inst.radius_sq - nx);
  const double beta = -t + std::sqrt(disc);
  return (x + beta * z).eval();
}

/// Exactness check: when the stacked condition holds the surrogate value
/// matches the exact optimum and the lift recovers an optimal point of the
/// original problem from the surrogate minimizer.
struct TightnessReport {
  ConditionReport cond;
  std::optional<double> surrogate_value;
  std::optional<Vector> lifted_x;
};

inline TightnessReport certify_tightness(const ProblemInstance& inst, const SolverConfig& cfg) {
  TightnessReport out;
  out.cond = check_conditions(inst, cfg);
  const SurrogateResult sr = surrogate_solve(inst, cfg);
  if (!sr.feasible) return out;
  out.surrogate_value = sr.value;
  if (out.cond.newdc && out.cond.lambda_min < 0.0)
    out.lifted_x = lift_to_sphere(inst, sr.x, cfg);
  else
    out.lifted_x = sr.x;
  return out;
}

}  // namespace etrs
