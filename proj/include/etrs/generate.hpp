#pragma once

#include <cmath>
#include <cstdint>

#include "etrs/model.hpp"
#include "etrs/types.hpp"

namespace etrs {
namespace detail {

// Fixed-algorithm generator so instances are reproducible across platforms
// and standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double pi = 3.14159265358979323846;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace detail

/// Random instance with a Slater point: b is chosen so that a fixed interior
/// point satisfies every row with positive margin, guaranteeing a nonempty
/// feasible set. density in (0, 1] sparsifies off-diagonal entries of Q.
inline ProblemInstance gen_random(int n, int m, std::uint64_t seed, double density = 1.0) {
  if (n < 1 || m < 0) throw BadOption("gen_random: need n >= 1, m >= 0");
  if (!(density > 0.0 && density <= 1.0)) throw BadOption("gen_random: density in (0, 1]");
  detail::Rng rng(seed);
  ProblemInstance inst;
  inst.n = n;
  inst.Q = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = rng.normal();
      const bool keep = (i == j) || density >= 1.0 || rng.uniform01() < density;
      inst.Q(i, j) = inst.Q(j, i) = keep ? v : 0.0;
    }
  inst.c = Vector(n);
  for (int i = 0; i < n; ++i) inst.c[i] = rng.normal();
  Vector x0(n);
  for (int i = 0; i < n; ++i) x0[i] = rng.normal();
  if (x0.norm() > 0.0) x0 *= 0.5 / x0.norm();
  inst.A = Matrix(m, n);
  inst.b = Vector(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) inst.A(i, j) = rng.normal();
    inst.b[i] = inst.A.row(i).dot(x0) + 0.5 * std::abs(rng.normal()) + 0.01;
  }
  return inst;
}

/// Standard quadratic program min y^T Qbar y over the simplex, rewritten in
/// the first nbar - 1 coordinates after eliminating the last one. The
/// feasible set {x >= 0, sum x <= 1} sits inside the unit ball, so the ball
/// constraint is inactive padding and the instance is equivalent to the
/// simplex program.
inline ProblemInstance simplex_qp_instance(const Matrix& qbar) {
  const int nbar = static_cast<int>(qbar.rows());
  if (nbar < 2 || qbar.cols() != nbar)
    throw BadOption("simplex_qp_instance: need square Qbar with nbar >= 2");
  const int n = nbar - 1;
  const Matrix q11 = qbar.topLeftCorner(n, n);
  const Vector q = qbar.topRightCorner(n, 1);
  const double qnn = qbar(n, n);
  const Vector e = Vector::Ones(n);

  ProblemInstance inst;
  inst.n = n;
  inst.Q = 2.0 * (q11 - q * e.transpose() - e * q.transpose() + qnn * (e * e.transpose()));
  inst.Q = (0.5 * (inst.Q + inst.Q.transpose())).eval();
  inst.c = 2.0 * (q - qnn * e);
  inst.f0 = qnn;
  inst.A = Matrix(nbar, n);
  inst.b = Vector(nbar);
  inst.A.topRows(n) = -Matrix::Identity(n, n);
  inst.b.head(n).setZero();
  inst.A.row(n) = e.transpose();
  inst.b[n] = 1.0;
  return inst;
}

inline ProblemInstance gen_qps(int nbar, std::uint64_t seed, bool identity = false) {
  if (nbar < 2) throw BadOption("gen_qps: need nbar >= 2");
  if (identity) return simplex_qp_instance(Matrix::Identity(nbar, nbar));
  detail::Rng rng(seed);
  Matrix qbar(nbar, nbar);
  for (int i = 0; i < nbar; ++i)
    for (int j = i; j < nbar; ++j) qbar(i, j) = qbar(j, i) = rng.normal();
  return simplex_qp_instance(qbar);
}

/// Instance engineered so the stacked exactness condition holds: the lowest
/// eigenvalue of Q is repeated and every constraint normal lies in the range
/// of Q - lambda_min I, leaving a common null direction.
inline ProblemInstance gen_structured(int n, int m, std::uint64_t seed) {
  if (n < 2 || m < 0) throw BadOption("gen_structured: need n >= 2, m >= 0");
  detail::Rng rng(seed);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix u = qr.householderQ();
  Vector ev(n);
  ev[0] = ev[1] = -1.0 - std::abs(rng.normal());
  for (int i = 2; i < n; ++i) ev[i] = ev[0] + 0.5 + std::abs(rng.normal());
  ProblemInstance inst;
  inst.n = n;
  inst.Q = u * ev.asDiagonal() * u.transpose();
  inst.Q = (0.5 * (inst.Q + inst.Q.transpose())).eval();
  inst.c = Vector(n);
  for (int i = 0; i < n; ++i) inst.c[i] = rng.normal();
  const Matrix shifted = inst.Q - ev[0] * Matrix::Identity(n, n);
  Vector x0(n);
  for (int i = 0; i < n; ++i) x0[i] = rng.normal();
  if (x0.norm() > 0.0) x0 *= 0.4 / x0.norm();
  inst.A = Matrix(m, n);
  inst.b = Vector(m);
  for (int i = 0; i < m; ++i) {
    Vector w(n);
    for (int j = 0; j < n; ++j) w[j] = rng.normal();
    Vector a = shifted * w;
    if (a.norm() > 0.0) a /= a.norm();
    inst.A.row(i) = a.transpose();
    inst.b[i] = a.dot(x0) + 0.3 * std::abs(rng.normal()) + 0.01;
  }
  return inst;
}

}  // namespace etrs
