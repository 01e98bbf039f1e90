#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace etrs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : SolverError {
  using SolverError::SolverError;
};
struct NonSymmetric : SolverError {
  using SolverError::SolverError;
};
struct ZeroRowInfeasible : SolverError {
  using SolverError::SolverError;
};
struct EigenFailure : SolverError {
  using SolverError::SolverError;
};
struct PoleProximity : SolverError {
  using SolverError::SolverError;
};
struct ZeroNormal : SolverError {
  using SolverError::SolverError;
};
struct ZeroDirection : SolverError {
  using SolverError::SolverError;
};
struct UnboundedObjective : SolverError {
  using SolverError::SolverError;
};
struct BudgetExceeded : SolverError {
  using SolverError::SolverError;
};
struct BadOption : SolverError {
  using SolverError::SolverError;
};

/// Input error carrying the position that made the file unreadable.
struct ParseError : SolverError {
  ParseError(const std::string& what, long line_, long column_)
      : SolverError(what), line(line_), column(column_) {}
  long line = 0;
  long column = 0;
};

/// Tolerances and budgets shared by every stage. All tolerances are strictly
/// positive; sym_tol and rank_tol are relative factors, the others absolute.
struct SolverConfig {
  double sym_tol = 1e-10;
  double feas_tol = 1e-9;
  double root_tol = 1e-12;
  double cluster_tol = 1e-8;
  double rank_tol = 1e-9;
  std::int64_t max_vertex_enum = 100000;
  bool parallel_facets = false;
  bool use_memo = true;
};

}  // namespace etrs
