#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "etrs/types.hpp"

namespace etrs {

/// One instance of the ball-plus-linear-inequalities problem
///
///   minimize  (1/2) x^T Q x + c^T x + f0
///   subject to  x^T x <= radius_sq,  a_i^T x <= b_i  (rows of A).
///
/// Q is symmetric, radius_sq > 0. f0 is an objective offset carried so that
/// derived instances (facet restrictions, simplex reformulations) keep their
/// absolute value; it is 0 for hand-written files unless stated.
struct ProblemInstance {
  int n = 0;
  Matrix Q;
  Vector c;
  Matrix A;
  Vector b;
  double radius_sq = 1.0;
  double f0 = 0.0;

  int m() const { return static_cast<int>(A.rows()); }
};

/// Eigendecomposition of Q in solver order: sigma ascending, basis rows are
/// the eigenvectors (y = basis * x, basis * Q * basis^T = diag(sigma)),
/// d = basis * c, and k is the multiplicity of sigma_1 under cluster_tol.
struct SpectralData {
  Vector sigma;
  Matrix basis;
  Vector d;
  int k = 0;
};

enum class SolveStatus { Optimal, Infeasible };

struct ReductionStats {
  std::int64_t trs0_solves = 0;
  std::int64_t nodes_visited = 0;
  std::int64_t memo_hits = 0;
  int max_depth = 0;
};

/// Solver output. `multiplier` is the ball multiplier certifying the leaf
/// that produced x (present when that leaf was a trust-region solve);
/// `active_set` lists 0-based rows of A tight at x within feas_tol;
/// `local_case_fired` records whether the boundary local-minimizer branch of
/// the combination rule supplied the final value.
struct SolutionReport {
  SolveStatus status = SolveStatus::Optimal;
  double value = 0.0;
  std::optional<Vector> x;
  std::optional<double> multiplier;
  std::vector<int> active_set;
  std::int64_t trs0_solves = 0;
  std::optional<bool> newdc_holds;
  bool local_case_fired = false;
  ReductionStats stats;
};

inline double objective_value(const ProblemInstance& inst, const Vector& x) {
  if (x.size() != inst.n) throw DimensionMismatch("objective_value: x has wrong length");
  return 0.5 * x.dot(inst.Q * x) + inst.c.dot(x) + inst.f0;
}

/// Checks shapes, symmetrizes Q (asymmetry up to sym_tol * max(1, ||Q||_F)),
/// and strips zero rows of A: a zero row with b_i >= 0 is vacuous, with
/// b_i < 0 the instance is trivially infeasible. Returns the cleaned copy.
inline ProblemInstance validate_instance(ProblemInstance inst, const SolverConfig& cfg) {
  if (inst.n <= 0) throw DimensionMismatch("instance: n must be positive");
  if (inst.Q.rows() != inst.n || inst.Q.cols() != inst.n)
    throw DimensionMismatch("instance: Q must be n x n");
  if (inst.c.size() != inst.n) throw DimensionMismatch("instance: c must have length n");
  if (inst.A.size() > 0 && inst.A.cols() != inst.n)
    throw DimensionMismatch("instance: A must have n columns");
  if (inst.b.size() != inst.A.rows()) throw DimensionMismatch("instance: b must match rows of A");
  if (!(inst.radius_sq > 0.0)) throw DimensionMismatch("instance: radius_sq must be positive");

  const double asym = (inst.Q - inst.Q.transpose()).lpNorm<Eigen::Infinity>();
  if (asym > cfg.sym_tol * std::max(1.0, inst.Q.norm()))
    throw NonSymmetric("instance: Q asymmetry exceeds tolerance");
  inst.Q = ((inst.Q + inst.Q.transpose()) * 0.5).eval();

  std::vector<int> keep;
  for (int i = 0; i < inst.m(); ++i) {
    if (inst.A.row(i).lpNorm<Eigen::Infinity>() == 0.0) {
      if (inst.b[i] < 0.0)
        throw ZeroRowInfeasible("instance: zero row with negative bound");
      continue;
    }
    keep.push_back(i);
  }
  if (static_cast<int>(keep.size()) != inst.m()) {
    Matrix a2(keep.size(), inst.n);
    Vector b2(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      a2.row(r) = inst.A.row(keep[r]);
      b2[r] = inst.b[keep[r]];
    }
    inst.A = a2;
    inst.b = b2;
  }
  return inst;
}

inline SpectralData spectral_decompose(const Matrix& q, const Vector& c,
                                       const SolverConfig& cfg) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  if (es.info() != Eigen::Success) throw EigenFailure("spectral_decompose: eigensolver failed");
  SpectralData sd;
  sd.sigma = es.eigenvalues();
  sd.basis = es.eigenvectors().transpose();
  sd.d = sd.basis * c;
  const double gate = cfg.cluster_tol * std::max(1.0, std::abs(sd.sigma[0]));
  sd.k = 0;
  for (int i = 0; i < sd.sigma.size(); ++i)
    if (sd.sigma[i] - sd.sigma[0] <= gate) ++sd.k;
  return sd;
}

}  // namespace etrs
