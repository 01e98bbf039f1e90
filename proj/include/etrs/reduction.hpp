#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "etrs/geometry.hpp"
#include "etrs/model.hpp"
#include "etrs/trs0.hpp"
#include "etrs/types.hpp"

namespace etrs {

/// Orthonormal chart of the plane a^T x = b: columns of p span the plane's
/// direction space (a^T p = 0, p^T p = I), z0 is the plane's min-norm point,
/// offset_sq = z0^T z0. Points of the plane are z0 + p w.
struct FacetBasis {
  Vector z0;
  Matrix p;
  double offset_sq = 0.0;
};

inline FacetBasis facet_basis(const Vector& a, double b) {
  const int n = static_cast<int>(a.size());
  const double nrm = a.norm();
  if (nrm == 0.0) throw ZeroNormal("facet_basis: zero normal");
  Vector ahat = a / nrm;
  Vector v = ahat;
  v[0] += (ahat[0] >= 0.0 ? 1.0 : -1.0);
  Matrix r = Matrix::Identity(n, n) - (2.0 / v.squaredNorm()) * (v * v.transpose());
  FacetBasis fb;
  fb.p = r.rightCols(n - 1);
  fb.z0 = (b / (nrm * nrm)) * a;
  fb.offset_sq = fb.z0.squaredNorm();
  return fb;
}

/// Restriction of an instance to the plane of facet j. Reduced instance is
/// in the rescaled chart x = z0 + r' p w with unit ball in w; objective and
/// remaining constraints are rewritten accordingly and the plane constant is
/// folded into f0.
struct FacetRestriction {
  enum class Kind { Infeasible, PointOnly, Reduced };
  Kind kind = Kind::Infeasible;
  Vector point;
  ProblemInstance inst;
  Vector offset;
  Matrix map;
};

inline FacetRestriction restrict_to_facet(const ProblemInstance& inst, int j,
                                          const SolverConfig& cfg) {
  FacetRestriction out;
  const Vector a = inst.A.row(j).transpose();
  const FacetBasis fb = facet_basis(a, inst.b[j]);
  const double rp_sq = inst.radius_sq - fb.offset_sq;
  if (rp_sq < -cfg.feas_tol) return out;
  if (std::abs(rp_sq) <= cfg.feas_tol || inst.n == 1) {
    out.kind = FacetRestriction::Kind::PointOnly;
    out.point = fb.z0;
    return out;
  }
  const double rp = std::sqrt(rp_sq);
  const int n = inst.n, m = inst.m();

  out.kind = FacetRestriction::Kind::Reduced;
  out.offset = fb.z0;
  out.map = rp * fb.p;
  out.inst.n = n - 1;
  out.inst.Q = rp_sq * (fb.p.transpose() * inst.Q * fb.p);
  out.inst.c = rp * (fb.p.transpose() * (inst.Q * fb.z0 + inst.c));
  out.inst.f0 = inst.f0 + 0.5 * fb.z0.dot(inst.Q * fb.z0) + inst.c.dot(fb.z0);
  out.inst.radius_sq = 1.0;
  out.inst.A.resize(m - 1, n - 1);
  out.inst.b.resize(m - 1);
  int r = 0;
  for (int i = 0; i < m; ++i) {
    if (i == j) continue;
    out.inst.A.row(r) = rp * (fb.p.transpose() * inst.A.row(i).transpose()).transpose();
    out.inst.b[r] = inst.b[i] - inst.A.row(i).dot(fb.z0);
    ++r;
  }
  return out;
}

/// Drops constraint rows whose reduced normal vanished: satisfied ones are
/// redundant, violated ones make the instance infeasible. `kept` maps rows
/// of the pruned instance back to rows of the input.
struct PruneResult {
  bool infeasible = false;
  ProblemInstance inst;
  std::vector<int> kept;
};

inline PruneResult prune_redundant(const ProblemInstance& inst, const SolverConfig& cfg) {
  PruneResult out;
  for (int i = 0; i < inst.m(); ++i) {
    if (inst.A.row(i).lpNorm<Eigen::Infinity>() <= cfg.rank_tol) {
      if (inst.b[i] < -cfg.feas_tol * std::max(1.0, std::abs(inst.b[i]))) {
        out.infeasible = true;
        return out;
      }
      continue;
    }
    out.kept.push_back(i);
  }
  out.inst = inst;
  if (static_cast<int>(out.kept.size()) != inst.m()) {
    out.inst.A.resize(out.kept.size(), inst.n);
    out.inst.b.resize(out.kept.size());
    for (std::size_t r = 0; r < out.kept.size(); ++r) {
      out.inst.A.row(r) = inst.A.row(out.kept[r]);
      out.inst.b[r] = inst.b[out.kept[r]];
    }
  }
  return out;
}

namespace detail {

struct NodeOutcome {
  bool feasible = false;
  double value = std::numeric_limits<double>::infinity();
  std::optional<Vector> x;
  std::optional<double> multiplier;
  bool local_case = false;
  bool from_trs0 = false;
};

// Node of the facet recursion, derived from the root instance by fixing the
// facets in `fixed` (ascending), so that equal fixed sets yield bitwise
// identical subproblems regardless of the path that reached them.
struct DerivedNode {
  bool infeasible = false;
  std::optional<NodeOutcome> settled;  // chain collapsed to a point
  ProblemInstance inst;
  Vector offset;
  Matrix map;
  std::vector<int> row_ids;
};

class ExtendedSolver {
 public:
  ExtendedSolver(ProblemInstance root, SolverConfig cfg)
      : root_(std::move(root)), cfg_(cfg) {}

  NodeOutcome solve(const std::vector<int>& fixed, int depth) {
    bump(stats_max_depth_, depth);
    ++stats_nodes_;
    if (cfg_.use_memo) {
      std::lock_guard<std::mutex> lk(memo_mu_);
      auto it = memo_.find(fixed);
      if (it != memo_.end()) {
        ++stats_memo_hits_;
        return it->second;
      }
    }
    NodeOutcome out = compute(fixed, depth);
    if (cfg_.use_memo) {
      std::lock_guard<std::mutex> lk(memo_mu_);
      memo_.emplace(fixed, out);
    }
    return out;
  }

  DerivedNode derive(const std::vector<int>& fixed) const {
    DerivedNode nd;
    nd.inst = root_;
    nd.offset = Vector::Zero(root_.n);
    nd.map = Matrix::Identity(root_.n, root_.n);
    nd.row_ids.resize(root_.m());
    for (int i = 0; i < root_.m(); ++i) nd.row_ids[i] = i;

    for (std::size_t t = 0; t < fixed.size(); ++t) {
      const auto pos = std::find(nd.row_ids.begin(), nd.row_ids.end(), fixed[t]);
      const int j = static_cast<int>(pos - nd.row_ids.begin());
      if (nd.inst.A.row(j).lpNorm<Eigen::Infinity>() <= cfg_.rank_tol) {
        if (std::abs(nd.inst.b[j]) >
            cfg_.feas_tol * std::max(1.0, std::abs(nd.inst.b[j]))) {
          nd.infeasible = true;
          return nd;
        }
        drop_row(nd, j);
        continue;
      }
      FacetRestriction fr = restrict_to_facet(nd.inst, j, cfg_);
      if (fr.kind == FacetRestriction::Kind::Infeasible) {
        nd.infeasible = true;
        return nd;
      }
      if (fr.kind == FacetRestriction::Kind::PointOnly) {
        nd.settled = settle_point(nd, fr.point, fixed, t);
        return nd;
      }
      nd.offset += nd.map * fr.offset;
      nd.map = (nd.map * fr.map).eval();
      nd.row_ids.erase(nd.row_ids.begin() + j);
      nd.inst = std::move(fr.inst);
    }

    PruneResult pr = prune_redundant(nd.inst, cfg_);
    if (pr.infeasible) {
      nd.infeasible = true;
      return nd;
    }
    std::vector<int> ids;
    ids.reserve(pr.kept.size());
    for (const int k : pr.kept) ids.push_back(nd.row_ids[k]);
    nd.row_ids = std::move(ids);
    nd.inst = std::move(pr.inst);
    return nd;
  }

  std::int64_t trs0_solves() const { return stats_trs0_; }
  ReductionStats stats() const {
    ReductionStats s;
    s.trs0_solves = stats_trs0_;
    s.nodes_visited = stats_nodes_;
    s.memo_hits = stats_memo_hits_;
    s.max_depth = stats_max_depth_;
    return s;
  }

 private:
  static void bump(std::atomic<int>& slot, int v) {
    int cur = slot.load();
    while (cur < v && !slot.compare_exchange_weak(cur, v)) {
    }
  }

  static void drop_row(DerivedNode& nd, int j) {
    const int m = nd.inst.m();
    Matrix a(m - 1, nd.inst.n);
    Vector b(m - 1);
    int r = 0;
    for (int i = 0; i < m; ++i) {
      if (i == j) continue;
      a.row(r) = nd.inst.A.row(i);
      b[r] = nd.inst.b[i];
      ++r;
    }
    nd.inst.A = a;
    nd.inst.b = b;
    nd.row_ids.erase(nd.row_ids.begin() + j);
  }

  // The restriction chain pinned the node to a single point: remaining fixed
  // facets must hold as equalities there, remaining rows as inequalities.
  NodeOutcome settle_point(const DerivedNode& nd, const Vector& z0,
                           const std::vector<int>& fixed, std::size_t t) const {
    NodeOutcome out;
    const Vector x = nd.offset + nd.map * z0;
    for (std::size_t s = t + 1; s < fixed.size(); ++s) {
      const double resid = root_.A.row(fixed[s]).dot(x) - root_.b[fixed[s]];
      if (std::abs(resid) > cfg_.feas_tol * std::max(1.0, std::abs(root_.b[fixed[s]])))
        return out;
    }
    for (int i = 0; i < nd.inst.m(); ++i) {
      const double slack = nd.inst.b[i] - nd.inst.A.row(i).dot(z0);
      if (slack < -cfg_.feas_tol * std::max(1.0, std::abs(nd.inst.b[i]))) return out;
    }
    out.feasible = true;
    out.value = objective_value(nd.inst, z0);
    out.x = x;
    return out;
  }

  // Maps a ball-problem solution set into the node polytope and reports a
  // common point if one exists (the v(T_m) = v(T_0) case).
  std::optional<Vector> intersect_set(const GlobalSet& gs, const SpectralData& sd,
                                      const ProblemInstance& inst) const {
    const int n = inst.n;
    if (std::holds_alternative<SingletonSet>(gs)) {
      const Vector xn = sd.basis.transpose() * std::get<SingletonSet>(gs).y;
      for (int i = 0; i < inst.m(); ++i)
        if (inst.A.row(i).dot(xn) >
            inst.b[i] + cfg_.feas_tol * std::max(1.0, std::abs(inst.b[i])))
          return std::nullopt;
      return xn;
    }
    const SphereSet& sp = std::get<SphereSet>(gs);
    const Matrix atil = inst.A * sd.basis.transpose();
    Vector yfull = Vector::Zero(n);
    yfull.tail(n - sp.k) = sp.tail;
    if (sp.radius_sq <= cfg_.root_tol) {
      for (int i = 0; i < inst.m(); ++i)
        if (atil.row(i).dot(yfull) >
            inst.b[i] + cfg_.feas_tol * std::max(1.0, std::abs(inst.b[i])))
          return std::nullopt;
      return (sd.basis.transpose() * yfull).eval();
    }
    const Matrix hh = atil.leftCols(sp.k);
    Vector gg(inst.m());
    for (int i = 0; i < inst.m(); ++i)
      gg[i] = inst.b[i] - atil.row(i).tail(n - sp.k).dot(sp.tail);
    const IntersectionWitness w = sphere_polytope_intersect(hh, gg, sp.radius_sq, cfg_);
    if (w.empty()) return std::nullopt;
    yfull.head(sp.k) = *w.point;
    return (sd.basis.transpose() * yfull).eval();
  }

  NodeOutcome compute(const std::vector<int>& fixed, int depth) {
    NodeOutcome out;
    DerivedNode nd = derive(fixed);
    if (nd.infeasible) return out;
    if (nd.settled) return *nd.settled;
    const ProblemInstance& inst = nd.inst;

    SpectralData sd = spectral_decompose(inst.Q, inst.c, cfg_);
    const double psd_gate =
        cfg_.rank_tol * std::max(1.0, sd.sigma.cwiseAbs().maxCoeff());
    if (sd.sigma[0] >= -psd_gate) {
      const ConvexResult cr = convex_minimize(inst.Q, inst.c, inst.A, inst.b,
                                              BallSpec{inst.radius_sq}, cfg_);
      if (!cr.feasible) return out;
      out.feasible = true;
      out.value = 0.5 * cr.point.dot(inst.Q * cr.point) + inst.c.dot(cr.point) + inst.f0;
      out.x = nd.offset + nd.map * cr.point;
      return out;
    }

    ++stats_trs0_;
    const GlobalSet gs = global_solve(sd, cfg_);
    if (const auto xn = intersect_set(gs, sd, inst)) {
      out.feasible = true;
      out.value = global_value(gs) + inst.f0;
      out.x = nd.offset + nd.map * (*xn);
      out.multiplier = global_multiplier(gs);
      out.from_trs0 = true;
      return out;
    }

    const int m = inst.m();
    std::vector<NodeOutcome> sub(m);
    auto child = [&](int j) {
      std::vector<int> f2 = fixed;
      f2.insert(std::upper_bound(f2.begin(), f2.end(), nd.row_ids[j]), nd.row_ids[j]);
      return solve(f2, depth + 1);
    };
    if (cfg_.parallel_facets && depth == 0 && m > 1) {
      std::vector<std::future<NodeOutcome>> futs;
      futs.reserve(m);
      for (int j = 0; j < m; ++j)
        futs.push_back(std::async(std::launch::async, child, j));
      for (int j = 0; j < m; ++j) sub[j] = futs[j].get();
    } else {
      for (int j = 0; j < m; ++j) sub[j] = child(j);
    }

    int best = -1;
    double vmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j)
      if (sub[j].feasible) vmin = std::min(vmin, sub[j].value);
    for (int j = 0; j < m; ++j)
      if (sub[j].feasible && sub[j].value <= vmin + 10.0 * cfg_.feas_tol) {
        best = j;
        break;
      }

    if (const auto cand = local_nonglobal(sd, cfg_)) {
      const Vector xn = sd.basis.transpose() * cand->y;
      bool strict = true;
      for (int i = 0; i < m && strict; ++i)
        if (inst.A.row(i).dot(xn) >=
            inst.b[i] - cfg_.feas_tol * std::max(1.0, std::abs(inst.b[i])))
          strict = false;
      const double fc = cand->value + inst.f0;
      if (strict && fc < vmin) {
        out.feasible = true;
        out.value = fc;
        out.x = nd.offset + nd.map * xn;
        out.multiplier = cand->mu;
        out.local_case = true;
        out.from_trs0 = true;
        return out;
      }
    }

    if (best < 0) return out;
    return sub[best];
  }

  ProblemInstance root_;
  SolverConfig cfg_;
  std::map<std::vector<int>, NodeOutcome> memo_;
  std::mutex memo_mu_;
  std::atomic<std::int64_t> stats_trs0_{0};
  std::atomic<std::int64_t> stats_nodes_{0};
  std::atomic<std::int64_t> stats_memo_hits_{0};
  std::atomic<int> stats_max_depth_{0};
};

}  // namespace detail

/// Exact global solve of the full instance by the combination rule: take
/// v(T_0) when its solution set meets the polytope, otherwise recurse over
/// facets, admitting the strictly interior local candidate only when it
/// beats every facet value. Implicit equality rows (tight over the whole
/// feasible region) are detected by LP pairs and pre-fixed.
inline SolutionReport solve_extended(const ProblemInstance& raw, const SolverConfig& cfg) {
  const ProblemInstance inst = validate_instance(raw, cfg);
  SolutionReport rep;

  detail::ExtendedSolver solver(inst, cfg);
  std::vector<int> fixed;

  for (bool changed = true; changed;) {
    changed = false;
    const detail::DerivedNode nd = solver.derive(fixed);
    if (nd.infeasible || nd.settled) break;
    const double box = std::sqrt(nd.inst.radius_sq);
    for (std::size_t i = 0; i < nd.row_ids.size(); ++i) {
      const Vector a = nd.inst.A.row(i).transpose();
      const LpResult lo = lp_minimize(a, nd.inst.A, nd.inst.b, box);
      if (lo.status == LpStatus::Infeasible) {
        rep.status = SolveStatus::Infeasible;
        rep.value = std::numeric_limits<double>::infinity();
        rep.trs0_solves = solver.trs0_solves();
        rep.stats = solver.stats();
        return rep;
      }
      if (lo.status != LpStatus::Optimal) continue;
      if (lo.value >= nd.inst.b[i] - cfg.feas_tol * std::max(1.0, std::abs(nd.inst.b[i]))) {
        fixed.insert(std::upper_bound(fixed.begin(), fixed.end(), nd.row_ids[i]),
                     nd.row_ids[i]);
        changed = true;
        break;
      }
    }
  }

  const detail::NodeOutcome out = solver.solve(fixed, 0);
  rep.trs0_solves = solver.trs0_solves();
  rep.stats = solver.stats();
  if (!out.feasible) {
    rep.status = SolveStatus::Infeasible;
    rep.value = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.status = SolveStatus::Optimal;
  rep.value = out.value;
  rep.x = out.x;
  rep.multiplier = out.from_trs0 ? out.multiplier : std::nullopt;
  rep.local_case_fired = out.local_case;
  if (out.x) {
    for (int i = 0; i < raw.m(); ++i) {
      const double resid = raw.A.row(i).dot(*out.x) - raw.b[i];
      if (std::abs(resid) <= 10.0 * cfg.feas_tol * std::max(1.0, std::abs(raw.b[i])))
        rep.active_set.push_back(i);
    }
  }
  return rep;
}

}  // namespace etrs
