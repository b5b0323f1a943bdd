#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "limitfield/expr.hpp"
#include "limitfield/field.hpp"

namespace limitfield {

// Outer schedule: a_k = a0 * gamma_a^k, eps_k = eps0 * gamma_eps^k.
struct Schedule {
  double a0 = 1.0;
  double eps0 = 1.0;
  double gamma_a = 0.5;
  double gamma_eps = 0.5;
  int max_outer = 40;
  int inner_cap = 200000;
};

enum class InnerSolver { DescentArmijo, GradientFlowRK4 };
enum class SolveStatus { Converged, MaxOuterReached, InnerStalled };

const char* to_string(SolveStatus s);

struct OuterRecord {
  int k = 0;
  double a = 0.0;
  double eps = 0.0;
  Vec x;
  double grad_norm = 0.0;
  int inner_iters = 0;
};

struct SolverTrace {
  std::vector<OuterRecord> outer;
  Vec final_x;
  SolveStatus status = SolveStatus::MaxOuterReached;
};

// The smoothing method: for each k solve |grad f_{a_k}| <= eps_k warm-started
// from the previous phase, then shrink (a_k, eps_k).
SolverTrace smoothing_solve(const SmoothingFamily& fam, const Vec& x0,
                            const Schedule& sch,
                            InnerSolver inner = InnerSolver::DescentArmijo);

// One RK4 step of the gradient flow x' = -grad f_a(x); dt is halved until the
// step does not increase f_a.
Vec gradient_flow_step(const SmoothingFamily& fam, const Vec& x, double a, double dt);

struct FinalCertificate {
  CriticalityReport report;
  LimitFieldEstimate estimate;
  std::string warning;  // nonempty for vacuous certificates
};

struct CertifyConfig {
  EstimatorConfig estimator;
  double tol = 1e-3;
};

// Runs the limit-field estimator at the final iterate and certifies
// dist(0, conv of clusters) <= tol.
FinalCertificate certify_final(const SolverTrace& trace, const SmoothingFamily& fam,
                               const TargetFn& F, const CertifyConfig& cfg);

nlohmann::json to_json(const SolverTrace& trace);

}  // namespace limitfield
