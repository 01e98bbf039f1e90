#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <etrs/generate.hpp>
#include <etrs/oracle.hpp>
#include <etrs/reduction.hpp>
#include <etrs/sdpcheck.hpp>

using etrs::Matrix;
using etrs::ProblemInstance;
using etrs::SolverConfig;
using etrs::Vector;

namespace {

ProblemInstance unconstrained_convex() {
  ProblemInstance inst;
  inst.n = 2;
  inst.Q = Matrix::Identity(2, 2);
  inst.c = Vector(2);
  inst.c << -0.5, 0.0;
  inst.A = Matrix(0, 2);
  inst.b = Vector(0);
  return inst;
}

}  // namespace

TEST_CASE("enumeration solves an interior convex case", "[oracle]") {
  SolverConfig cfg;
  const etrs::OracleResult res = etrs::kkt_enumerate(unconstrained_convex(), cfg);
  REQUIRE(res.feasible);
  CHECK(res.value == Catch::Approx(-0.125));
  CHECK(res.x[0] == Catch::Approx(0.5));
  CHECK(res.candidates > 0);
}

TEST_CASE("enumeration covers decoupled sphere families", "[oracle]") {
  SolverConfig cfg;
  ProblemInstance inst;
  inst.n = 3;
  inst.Q = Matrix::Zero(3, 3);
  inst.Q(0, 0) = -1.0;
  inst.Q(1, 1) = -1.0;
  inst.Q(2, 2) = 1.0;
  inst.c = Vector(3);
  inst.c << 0.0, 0.0, 0.5;
  inst.A = Matrix(0, 3);
  inst.b = Vector(0);
  const etrs::OracleResult res = etrs::kkt_enumerate(inst, cfg);
  REQUIRE(res.feasible);
  CHECK(res.value == Catch::Approx(-0.5625).epsilon(1e-9));
}

TEST_CASE("enumeration flags infeasible systems", "[oracle]") {
  SolverConfig cfg;
  ProblemInstance inst = unconstrained_convex();
  inst.A = Matrix(2, 2);
  inst.A << 1.0, 0.0, -1.0, 0.0;
  inst.b = Vector(2);
  inst.b << -3.0, 2.0;
  const etrs::OracleResult res = etrs::kkt_enumerate(inst, cfg);
  CHECK_FALSE(res.feasible);
}

TEST_CASE("enumeration refuses oversized instances", "[oracle]") {
  SolverConfig cfg;
  const ProblemInstance big = etrs::gen_random(9, 1, 7);
  CHECK_THROWS_AS(etrs::kkt_enumerate(big, cfg), etrs::BudgetExceeded);
}

TEST_CASE("lattice polish refuses oversized instances", "[oracle]") {
  SolverConfig cfg;
  const ProblemInstance big = etrs::gen_random(5, 1, 7);
  CHECK_THROWS_AS(etrs::grid_polish(big, 2, cfg), etrs::BudgetExceeded);
}

TEST_CASE("the two oracles agree with the solver", "[oracle]") {
  SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProblemInstance inst = etrs::gen_random(2, 2, seed * 211 + 9);
    const etrs::SolutionReport rep = etrs::solve_extended(inst, cfg);
    const etrs::OracleResult kkt = etrs::kkt_enumerate(inst, cfg);
    const etrs::OracleResult grid = etrs::grid_polish(inst, 2, cfg);
    REQUIRE(rep.status == etrs::SolveStatus::Optimal);
    REQUIRE(kkt.feasible);
    REQUIRE(grid.feasible);
    INFO("seed=" << seed);
    CHECK(rep.value == Catch::Approx(kkt.value).epsilon(1e-8).margin(1e-8));
    CHECK(grid.value >= kkt.value - 1e-8);
    CHECK(rep.value <= grid.value + 1e-6);
  }
}

TEST_CASE("lattice polish is exact on convex instances", "[oracle]") {
  SolverConfig cfg;
  const ProblemInstance inst = unconstrained_convex();
  const etrs::OracleResult grid = etrs::grid_polish(inst, 2, cfg);
  REQUIRE(grid.feasible);
  CHECK(grid.value == Catch::Approx(-0.125).margin(1e-9));
}

TEST_CASE("oracle candidates satisfy the constraints they report", "[oracle]") {
  SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProblemInstance inst = etrs::gen_random(3, 3, seed * 97 + 41);
    const etrs::OracleResult res = etrs::kkt_enumerate(inst, cfg);
    REQUIRE(res.feasible);
    CHECK(res.x.squaredNorm() <= 1.0 + 1e-7);
    for (int i = 0; i < inst.m(); ++i)
      CHECK(inst.A.row(i).dot(res.x) <=
            inst.b[i] + 1e-7 * std::max(1.0, std::abs(inst.b[i])));
    CHECK(etrs::objective_value(inst, res.x) == Catch::Approx(res.value));
  }
}

TEST_CASE("generator is deterministic per seed", "[oracle]") {
  const ProblemInstance a = etrs::gen_random(4, 3, 99);
  const ProblemInstance b = etrs::gen_random(4, 3, 99);
  const ProblemInstance c = etrs::gen_random(4, 3, 100);
  CHECK((a.Q - b.Q).norm() == 0.0);
  CHECK((a.c - b.c).norm() == 0.0);
  CHECK((a.A - b.A).norm() == 0.0);
  CHECK((a.b - b.b).norm() == 0.0);
  CHECK((a.Q - c.Q).norm() > 0.0);
}

TEST_CASE("generated instances keep their promises", "[oracle]") {
  SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const ProblemInstance r = etrs::gen_random(3, 4, seed);
    CHECK(etrs::solve_extended(r, cfg).status == etrs::SolveStatus::Optimal);

    const ProblemInstance s = etrs::gen_structured(3, 2, seed);
    CHECK(etrs::check_newdc(s, cfg));
    CHECK(etrs::solve_extended(s, cfg).status == etrs::SolveStatus::Optimal);
  }

  const ProblemInstance qps = etrs::gen_qps(2, 0, true);
  const etrs::SolutionReport rep = etrs::solve_extended(qps, cfg);
  REQUIRE(rep.status == etrs::SolveStatus::Optimal);
  CHECK(rep.value == Catch::Approx(0.5).epsilon(1e-10));
  CHECK((*rep.x)[0] == Catch::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("simplex rewrite preserves simplex objectives", "[oracle]") {
  SolverConfig cfg;
  etrs::detail::Rng rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix qbar(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) qbar(i, j) = qbar(j, i) = rng.normal();
    const ProblemInstance inst = etrs::simplex_qp_instance(qbar);
    for (int trial = 0; trial < 20; ++trial) {
      Vector y(3);
      double s = 0.0;
      for (int i = 0; i < 3; ++i) {
        y[i] = rng.uniform01();
        s += y[i];
      }
      y /= s;
      Vector x = y.head(2);
      CHECK(etrs::objective_value(inst, x) ==
            Catch::Approx(y.dot(qbar * y)).margin(1e-10));
    }
  }
}
