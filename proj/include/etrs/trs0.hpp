#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <variant>

#include "etrs/model.hpp"
#include "etrs/types.hpp"

namespace etrs {

/// phi(mu) = sum_i d_i^2 / (sigma_i + mu)^2 - 1 in the eigenbasis of Q.
/// Roots of phi with mu >= -sigma_1 are boundary multipliers of the ball
/// problem; phi is strictly convex between consecutive poles.
struct SecularFunction {
  Vector sigma;
  Vector d;
  int k = 0;
};

inline SecularFunction make_secular(const SpectralData& sd) {
  return SecularFunction{sd.sigma, sd.d, sd.k};
}

struct SecularValue {
  double phi = 0.0;
  double dphi = 0.0;
};

inline SecularValue secular_eval(const SecularFunction& sf, double mu) {
  SecularValue out{-1.0, 0.0};
  for (int i = 0; i < sf.sigma.size(); ++i) {
    if (sf.d[i] == 0.0) continue;
    const double den = sf.sigma[i] + mu;
    const double guard = 1e-13 * std::max(1.0, std::abs(sf.sigma[i]));
    if (std::abs(den) <= guard)
      throw PoleProximity("secular_eval: mu within guard of an active pole");
    const double t = sf.d[i] / den;
    out.phi += t * t;
    out.dphi += -2.0 * t * t / den;
  }
  return out;
}

struct SingletonSet {
  Vector y;
  double mu = 0.0;
  double value = 0.0;
};

/// Hard-case solution set: a k-dimensional sphere in the leading eigenspace.
/// Full minimizers are y = (u, tail) with ||u||^2 = radius_sq; the objective
/// is constant on the set.
struct SphereSet {
  int k = 0;
  Vector tail;
  double radius_sq = 0.0;
  double mu = 0.0;
  double value = 0.0;
};

using GlobalSet = std::variant<SingletonSet, SphereSet>;

inline double global_value(const GlobalSet& gs) {
  return std::holds_alternative<SingletonSet>(gs) ? std::get<SingletonSet>(gs).value
                                                  : std::get<SphereSet>(gs).value;
}

inline double global_multiplier(const GlobalSet& gs) {
  return std::holds_alternative<SingletonSet>(gs) ? std::get<SingletonSet>(gs).mu
                                                  : std::get<SphereSet>(gs).mu;
}

/// Strict local minimizer of the ball problem that is not global
/// (at most one exists; only when k = 1 and d_1 != 0). dphi > 0 certifies
/// strictness.
struct LocalCandidate {
  Vector y;
  double mu = 0.0;
  double dphi = 0.0;
  double value = 0.0;
};

namespace detail {

// Shifted secular sum: st(t) = sum d_i^2/(gap_i + t)^2 - 1 with
// gap_i = sigma_i + mu_lo >= 0, evaluated without the sigma_i + mu
// cancellation near the smallest pole.
inline double shifted_phi(const Vector& gap, const Vector& d, double t, double* dphi = nullptr) {
  double phi = -1.0, der = 0.0;
  for (int i = 0; i < gap.size(); ++i) {
    if (d[i] == 0.0) continue;
    const double den = gap[i] + t;
    const double r = d[i] / den;
    phi += r * r;
    der += -2.0 * r * r / den;
  }
  if (dphi) *dphi = der;
  return phi;
}

// Root of shifted_phi on (0, inf). Requires shifted_phi(0+) > 0 (possibly
// +inf). Safeguarded Newton inside a sign-change bracket.
inline double shifted_root(const Vector& gap, const Vector& d, double root_tol) {
  double hi = 1.0 + d.norm();
  for (int guard = 0; guard < 200 && shifted_phi(gap, d, hi) >= 0.0; ++guard) hi *= 2.0;
  double lo = std::min(1e-3, 0.5 * hi);
  while (shifted_phi(gap, d, lo) <= 0.0) {
    lo /= 8.0;
    if (lo < 1e-300) throw EigenFailure("trs0: secular bracket collapsed");
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double der = 0.0;
    const double phi = shifted_phi(gap, d, t, &der);
    if (std::abs(phi) <= root_tol) return t;
    if (phi > 0.0)
      lo = t;
    else
      hi = t;
    double tn = (der != 0.0) ? t - phi / der : t;
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (hi - lo <= 1e-16 * std::max(1.0, t)) return tn;
    t = tn;
  }
  return t;
}

inline double set_value(const Vector& sigma, const Vector& d, const Vector& y) {
  double v = 0.0;
  for (int i = 0; i < sigma.size(); ++i) v += 0.5 * sigma[i] * y[i] * y[i] + d[i] * y[i];
  return v;
}

}  // namespace detail

/// Global solution set of  min (1/2) y^T diag(sigma) y + d^T y  over
/// ||y||^2 <= 1. Returns a singleton unless the hard case holds (leading
/// cluster carries no linear mass and the tail point is inside the ball), in
/// which case the set is a k-sphere at multiplier -sigma_1.
inline GlobalSet global_solve(const SpectralData& sd, const SolverConfig& cfg) {
  const int n = static_cast<int>(sd.sigma.size());
  const Vector& sigma = sd.sigma;
  const Vector& d = sd.d;
  const double s1 = sigma[0];
  const double hard_gate = 1e-11 * std::max(1.0, d.norm());

  if (s1 >= 0.0) {
    Vector y = Vector::Zero(n);
    bool stationary = true;
    for (int i = 0; i < n; ++i) {
      if (d[i] == 0.0) continue;
      if (sigma[i] == 0.0) {
        stationary = false;
        break;
      }
      y[i] = -d[i] / sigma[i];
    }
    if (stationary && y.squaredNorm() <= 1.0)
      return SingletonSet{y, 0.0, detail::set_value(sigma, d, y)};
  }

  const double mu_lo = std::max(0.0, -s1);
  Vector gap(n);
  for (int i = 0; i < n; ++i) gap[i] = (s1 < 0.0) ? sigma[i] - s1 : sigma[i];

  Vector deff = d;
  if (s1 < 0.0) {
    double head_sq = 0.0;
    for (int i = 0; i < sd.k; ++i) head_sq += d[i] * d[i];
    if (std::sqrt(head_sq) <= hard_gate) {
      for (int i = 0; i < sd.k; ++i) deff[i] = 0.0;
      double tail_sq = 0.0;
      Vector tail(n - sd.k);
      for (int i = sd.k; i < n; ++i) {
        tail[i - sd.k] = -d[i] / gap[i];
        tail_sq += tail[i - sd.k] * tail[i - sd.k];
      }
      if (tail_sq <= 1.0 + cfg.root_tol) {
        SphereSet sp;
        sp.k = sd.k;
        sp.tail = tail;
        sp.radius_sq = std::max(0.0, 1.0 - tail_sq);
        sp.mu = -s1;
        Vector y = Vector::Zero(n);
        y.tail(n - sd.k) = tail;
        sp.value = detail::set_value(sigma, d, y) + 0.5 * s1 * sp.radius_sq;
        return sp;
      }
    }
  }

  const double t = detail::shifted_root(gap, deff, cfg.root_tol);
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = (deff[i] == 0.0) ? 0.0 : -deff[i] / (gap[i] + t);
  return SingletonSet{y, mu_lo + t, detail::set_value(sigma, d, y)};
}

/// The at-most-one local non-global minimizer: the right root of phi on
/// (max(-sigma_2, 0), -sigma_1) where phi' > 0. Exists only when k = 1 and
/// d_1 != 0; tangencies (phi grazing zero) report empty.
inline std::optional<LocalCandidate> local_nonglobal(const SpectralData& sd,
                                                     const SolverConfig& cfg) {
  const int n = static_cast<int>(sd.sigma.size());
  const Vector& sigma = sd.sigma;
  const Vector& d = sd.d;
  if (sd.k >= 2) return std::nullopt;
  if (std::abs(d[0]) <= 1e-11 * std::max(1.0, d.norm())) return std::nullopt;
  const double hi = -sigma[0];
  if (hi <= 0.0) return std::nullopt;
  const double lo = (n >= 2) ? std::max(-sigma[1], 0.0) : 0.0;
  if (lo >= hi) return std::nullopt;
  const double delta = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  double a = lo + delta, b = hi - delta;
  if (a >= b) return std::nullopt;

  const SecularFunction sf = make_secular(sd);
  auto eval = [&](double mu) { return secular_eval(sf, mu); };

  double mu_min = a;
  if (eval(a).dphi < 0.0) {
    if (eval(b).dphi <= 0.0) return std::nullopt;
    double x0 = a, x1 = b;
    for (int it = 0; it < 200 && x1 - x0 > 1e-15 * std::max(1.0, std::abs(x1)); ++it) {
      const double mid = 0.5 * (x0 + x1);
      (eval(mid).dphi < 0.0 ? x0 : x1) = mid;
    }
    mu_min = 0.5 * (x0 + x1);
  }
  if (eval(mu_min).phi >= -cfg.root_tol) return std::nullopt;

  double x0 = mu_min, x1 = b;
  if (eval(x1).phi <= 0.0) return std::nullopt;
  double mu = 0.5 * (x0 + x1);
  for (int it = 0; it < 200; ++it) {
    const SecularValue v = eval(mu);
    if (std::abs(v.phi) <= cfg.root_tol) break;
    if (v.phi < 0.0)
      x0 = mu;
    else
      x1 = mu;
    double next = (v.dphi != 0.0) ? mu - v.phi / v.dphi : mu;
    if (!(next > x0 && next < x1)) next = 0.5 * (x0 + x1);
    if (x1 - x0 <= 1e-16 * std::max(1.0, mu)) {
      mu = next;
      break;
    }
    mu = next;
  }

  LocalCandidate cand;
  cand.mu = mu;
  cand.dphi = eval(mu).dphi;
  if (cand.dphi <= 0.0) return std::nullopt;
  cand.y.resize(n);
  for (int i = 0; i < n; ++i) cand.y[i] = -d[i] / (sigma[i] + mu);
  cand.value = detail::set_value(sigma, d, cand.y);
  return cand;
}

}  // namespace etrs
