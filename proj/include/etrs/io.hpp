#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "etrs/model.hpp"
#include "etrs/types.hpp"

namespace etrs {
namespace detail {

inline std::pair<int, int> offset_to_line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline Vector json_to_vector(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array", 0, 0);
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + ": expected numbers", 0, 0);
    v[i] = j[i].get<double>();
  }
  return v;
}

inline Matrix json_to_matrix(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of rows", 0, 0);
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  if (rows > 0) {
    if (!j[0].is_array()) throw ParseError(std::string(what) + ": rows must be arrays", 0, 0);
    cols = j[0].size();
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError(std::string(what) + ": ragged rows", 0, 0);
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw ParseError(std::string(what) + ": expected numbers", 0, 0);
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

}  // namespace detail

/// Parses an instance from JSON text. Required keys: n, Q, c, A, b.
/// Optional: f0 (objective constant, default 0). Shapes are checked here;
/// numeric validity is the solver's validate step.
inline ProblemInstance parse_instance(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::offset_to_line_col(text, e.byte);
    throw ParseError(std::string("invalid JSON: ") + e.what(), line, col);
  }
  if (!j.is_object()) throw ParseError("top level must be an object", 0, 0);
  for (const char* key : {"n", "Q", "c", "A", "b"})
    if (!j.contains(key)) throw ParseError(std::string("missing key: ") + key, 0, 0);
  if (!j["n"].is_number_integer()) throw ParseError("n: expected an integer", 0, 0);

  ProblemInstance inst;
  inst.n = j["n"].get<int>();
  inst.Q = detail::json_to_matrix(j["Q"], "Q");
  inst.c = detail::json_to_vector(j["c"], "c");
  inst.A = detail::json_to_matrix(j["A"], "A");
  inst.b = detail::json_to_vector(j["b"], "b");
  if (inst.A.rows() > 0 && inst.A.cols() != inst.n)
    throw ParseError("A: rows must have n entries", 0, 0);
  if (inst.A.rows() == 0) inst.A = Matrix(0, inst.n);
  if (j.contains("f0")) {
    if (!j["f0"].is_number()) throw ParseError("f0: expected a number", 0, 0);
    inst.f0 = j["f0"].get<double>();
  }
  return inst;
}

inline std::string dump_instance(const ProblemInstance& inst) {
  nlohmann::json j;
  j["n"] = inst.n;
  j["Q"] = detail::matrix_to_json(inst.Q);
  j["c"] = detail::vector_to_json(inst.c);
  j["A"] = detail::matrix_to_json(inst.A);
  j["b"] = detail::vector_to_json(inst.b);
  j["f0"] = inst.f0;
  return j.dump(2) + "\n";
}

inline std::string dump_report(const SolutionReport& rep) {
  nlohmann::json j;
  j["status"] = rep.status == SolveStatus::Optimal ? "optimal" : "infeasible";
  if (rep.status == SolveStatus::Optimal) {
    j["value"] = rep.value;
    j["x"] = rep.x ? detail::vector_to_json(*rep.x) : nlohmann::json();
    j["multiplier"] = rep.multiplier ? nlohmann::json(*rep.multiplier) : nlohmann::json();
  } else {
    j["value"] = nullptr;
    j["x"] = nullptr;
    j["multiplier"] = nullptr;
  }
  j["active_set"] = rep.active_set;
  j["local_case"] = rep.local_case_fired;
  j["trs0_solves"] = rep.trs0_solves;
  j["stats"] = {{"nodes_visited", rep.stats.nodes_visited},
                {"memo_hits", rep.stats.memo_hits},
                {"max_depth", rep.stats.max_depth}};
  return j.dump(2) + "\n";
}

}  // namespace etrs
