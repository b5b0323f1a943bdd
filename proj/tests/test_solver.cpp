#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "limitfield/solver.hpp"
#include "oracles.hpp"

using namespace limitfield;

TEST_CASE("smoothed absolute value converges to the kink minimum") {
  SmoothingFamily fam = builtin_family("absl1");
  SolverTrace trace = smoothing_solve(fam, {3.0}, Schedule{});
  CHECK(trace.status == SolveStatus::Converged);
  CHECK(std::abs(trace.final_x[0]) <= 1e-3);
  CHECK(trace.outer.size() <= 40);
  // Gradient targets shrink geometrically and each phase meets its target.
  for (const auto& rec : trace.outer) CHECK(rec.grad_norm <= rec.eps);
}

TEST_CASE("final certificate at the abs minimum is critical") {
  SmoothingFamily fam = builtin_family("absl1");
  SolverTrace trace = smoothing_solve(fam, {3.0}, Schedule{});
  FinalCertificate cert = certify_final(trace, fam, fam.target, CertifyConfig{});
  CHECK(cert.report.critical);
  CHECK(cert.report.hull_distance <= 1e-3);
  CHECK(cert.warning.empty());
}

TEST_CASE("oscillatory family yields a vacuous certificate warning") {
  SmoothingFamily fam = builtin_family("sin");
  SolverTrace trace = smoothing_solve(fam, {0.7}, Schedule{});
  FinalCertificate cert = certify_final(trace, fam, fam.target, CertifyConfig{});
  if (cert.report.critical) CHECK(cert.warning == "oscillatory family: certificate vacuous");
}

TEST_CASE("non-Lipschitz benchmark reaches the grid-oracle minimizer") {
  SmoothingFamily fam = builtin_family("nlq");
  SolverTrace trace = smoothing_solve(fam, {1.0, 1.0}, Schedule{});
  // Reference: x2 solves a smooth quadratic (minimum 0); x1 minimizes
  // t^2 + sqrt(|t|), located by dense search.
  double ref1 = oracles::grid_minimize(
      [](double t) { return t * t + std::sqrt(std::abs(t)); }, -1.0, 1.0);
  CHECK(std::abs(trace.final_x[0] - ref1) <= 1e-3);
  CHECK(std::abs(trace.final_x[1] - 0.0) <= 1e-3);
}

TEST_CASE("max_outer 0 reports MaxOuterReached") {
  SmoothingFamily fam = builtin_family("absl1");
  Schedule sch;
  sch.max_outer = 0;
  SolverTrace trace = smoothing_solve(fam, {1.0}, sch);
  CHECK(trace.status == SolveStatus::MaxOuterReached);
  CHECK(trace.final_x[0] == 1.0);
}

TEST_CASE("starved inner budget reports non-convergence, not a lie") {
  SmoothingFamily fam = builtin_family("nlq");
  Schedule sch;
  sch.inner_cap = 3;
  SolverTrace trace = smoothing_solve(fam, {1.0, 1.0}, sch);
  CHECK(trace.status != SolveStatus::Converged);
}

TEST_CASE("gradient flow step never increases the objective") {
  SmoothingFamily fam = builtin_family("chen");
  Vec x{0.8};
  for (int i = 0; i < 50; ++i) {
    double before = fam.value(x, 0.3);
    x = gradient_flow_step(fam, x, 0.3, 0.2);
    CHECK(fam.value(x, 0.3) <= before + 1e-15);
  }
}

TEST_CASE("flow inner solver also minimizes the smoothed abs") {
  SmoothingFamily fam = builtin_family("absl1");
  Schedule sch;
  sch.max_outer = 18;
  sch.inner_cap = 20000;
  SolverTrace trace = smoothing_solve(fam, {2.0}, sch, InnerSolver::GradientFlowRK4);
  CHECK(std::abs(trace.final_x[0]) <= 1e-2);
}

TEST_CASE("invalid schedules rejected") {
  SmoothingFamily fam = builtin_family("absl1");
  Schedule bad;
  bad.gamma_a = 1.0;
  CHECK_THROWS_AS(smoothing_solve(fam, {1.0}, bad), Error);
  CHECK_THROWS_AS(gradient_flow_step(fam, {1.0}, -0.1, 0.1), Error);
}

TEST_CASE("trace JSON records the outer schedule") {
  SmoothingFamily fam = builtin_family("absl1");
  Schedule sch;
  sch.max_outer = 3;
  SolverTrace trace = smoothing_solve(fam, {0.5}, sch);
  nlohmann::json j = to_json(trace);
  CHECK(j["outer"].size() == trace.outer.size());
  CHECK(j["status"] == "Converged");
  CHECK(j["final_x"].size() == 1);
}
