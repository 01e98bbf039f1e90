#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <etrs/generate.hpp>
#include <etrs/reduction.hpp>
#include <etrs/sdpcheck.hpp>

using etrs::Matrix;
using etrs::ProblemInstance;
using etrs::SolverConfig;
using etrs::Vector;

namespace {

ProblemInstance repeated_bottom() {
  ProblemInstance inst;
  inst.n = 3;
  inst.Q = Matrix::Zero(3, 3);
  inst.Q(0, 0) = -1.0;
  inst.Q(1, 1) = -1.0;
  inst.Q(2, 2) = 1.0;
  inst.c = Vector(3);
  inst.c << 0.0, 0.0, 0.5;
  inst.A = Matrix(1, 3);
  inst.A << 1.0, 0.0, 0.0;
  inst.b = Vector(1);
  inst.b << 0.2;
  return inst;
}

}  // namespace

TEST_CASE("condition report on a pinned instance", "[sdpcheck]") {
  SolverConfig cfg;
  const etrs::ConditionReport cond = etrs::check_conditions(repeated_bottom(), cfg);
  CHECK(cond.lambda_min == Catch::Approx(-1.0));
  CHECK(cond.null_dim == 2);
  CHECK(cond.rank_a == 1);
  CHECK(cond.dc);
  CHECK(cond.newdc);
  CHECK(etrs::check_dc(repeated_bottom(), cfg));
  CHECK(etrs::check_newdc(repeated_bottom(), cfg));
}

TEST_CASE("generic instances fail the rank conditions", "[sdpcheck]") {
  SolverConfig cfg;
  int newdc_false = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProblemInstance inst = etrs::gen_random(4, 2, seed * 71 + 29);
    const etrs::ConditionReport cond = etrs::check_conditions(inst, cfg);
    if (!cond.newdc) ++newdc_false;
    if (cond.dc) CHECK(cond.newdc);
  }
  CHECK(newdc_false == 10);
}

TEST_CASE("the multiplicity condition implies the stacked condition", "[sdpcheck]") {
  SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const ProblemInstance inst = etrs::gen_structured(4, 2, seed * 101 + 3);
    const etrs::ConditionReport cond = etrs::check_conditions(inst, cfg);
    CHECK(cond.newdc);
    if (cond.dc) CHECK(cond.newdc);
  }
}

TEST_CASE("surrogate lower-bounds the exact optimum", "[sdpcheck]") {
  SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const ProblemInstance inst = etrs::gen_random(3, 2, seed * 37 + 17);
    const etrs::SurrogateResult sr = etrs::surrogate_solve(inst, cfg);
    const etrs::SolutionReport rep = etrs::solve_extended(inst, cfg);
    REQUIRE(sr.feasible);
    REQUIRE(rep.status == etrs::SolveStatus::Optimal);
    CHECK(sr.value <= rep.value + 1e-7);
  }
}

TEST_CASE("surrogate is exact on convex instances", "[sdpcheck]") {
  SolverConfig cfg;
  ProblemInstance inst = etrs::gen_random(3, 2, 404);
  inst.Q = inst.Q.transpose() * inst.Q + Matrix::Identity(3, 3);
  const etrs::SurrogateResult sr = etrs::surrogate_solve(inst, cfg);
  const etrs::SolutionReport rep = etrs::solve_extended(inst, cfg);
  CHECK(sr.shift == 0.0);
  CHECK(sr.value == Catch::Approx(rep.value).margin(1e-8));
}

TEST_CASE("stacked condition certifies a zero gap and a sphere lift", "[sdpcheck]") {
  SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const ProblemInstance inst = etrs::gen_structured(4, 2, seed * 11 + 5);
    const etrs::SolutionReport rep = etrs::solve_extended(inst, cfg);
    const etrs::TightnessReport tight = etrs::certify_tightness(inst, cfg);
    REQUIRE(rep.status == etrs::SolveStatus::Optimal);
    REQUIRE(tight.surrogate_value.has_value());
    INFO("seed=" << seed);
    CHECK(tight.cond.newdc);
    CHECK(*tight.surrogate_value ==
          Catch::Approx(rep.value).epsilon(1e-7).margin(1e-7));
    REQUIRE(tight.lifted_x.has_value());
    CHECK(tight.lifted_x->norm() == Catch::Approx(1.0).epsilon(1e-8));
    CHECK(etrs::objective_value(inst, *tight.lifted_x) ==
          Catch::Approx(*tight.surrogate_value).epsilon(1e-7).margin(1e-7));
    for (int i = 0; i < inst.m(); ++i)
      CHECK(inst.A.row(i).dot(*tight.lifted_x) <= inst.b[i] + 1e-7);
  }
}

TEST_CASE("lift returns points already on the sphere unchanged", "[sdpcheck]") {
  SolverConfig cfg;
  const ProblemInstance inst = repeated_bottom();
  Vector on(3);
  on << 0.0, 1.0, 0.0;
  const auto lifted = etrs::lift_to_sphere(inst, on, cfg);
  REQUIRE(lifted.has_value());
  CHECK((*lifted - on).norm() == 0.0);
}

TEST_CASE("lift declines when no common null direction exists", "[sdpcheck]") {
  SolverConfig cfg;
  ProblemInstance inst = repeated_bottom();
  inst.Q(1, 1) = 0.5;
  inst.A = Matrix(2, 3);
  inst.A << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
  inst.b = Vector(2);
  inst.b << 0.2, 0.2;
  const auto lifted = etrs::lift_to_sphere(inst, Vector::Zero(3), cfg);
  CHECK_FALSE(lifted.has_value());
}

TEST_CASE("infeasible instances yield no surrogate value", "[sdpcheck]") {
  SolverConfig cfg;
  ProblemInstance inst = repeated_bottom();
  inst.A = Matrix(2, 3);
  inst.A << 1.0, 0.0, 0.0, -1.0, 0.0, 0.0;
  inst.b = Vector(2);
  inst.b << -3.0, 2.0;
  const etrs::SurrogateResult sr = etrs::surrogate_solve(inst, cfg);
  CHECK_FALSE(sr.feasible);
  const etrs::TightnessReport tight = etrs::certify_tightness(inst, cfg);
  CHECK_FALSE(tight.surrogate_value.has_value());
}
