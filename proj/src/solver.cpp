#include "limitfield/solver.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace limitfield {

using json = nlohmann::json;

namespace {

constexpr double kArmijoC = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr double kStepMin = 1e-14;
constexpr int kStallLimit = 50;

struct InnerResult {
  Vec x;
  double grad_norm = 0.0;
  int iters = 0;
  bool reached = false;
  bool stalled = false;
};

InnerResult descent_armijo(const SmoothingFamily& fam, Vec x, double a, double eps,
                           int cap) {
  InnerResult res;
  double f = fam.value(x, a);
  Vec g = fam.gradient(x, a);
  double gn = norm(g);
  double step = 1.0 / (1.0 + gn);
  Vec x_prev, g_prev;
  int stall = 0;

  for (int it = 0; it < cap && gn > eps; ++it) {
    ++res.iters;
    // Barzilai-Borwein step after the first iteration.
    if (!x_prev.empty()) {
      Vec s = sub(x, x_prev);
      Vec y = sub(g, g_prev);
      double yy = dot(y, y);
      double sy = dot(s, y);
      if (yy > 0.0 && sy > 0.0) step = std::clamp(sy / yy, 1e-14, 1e12);
    }
    double tau = step;
    bool accepted = false;
    Vec trial(x.size());
    while (tau >= kStepMin) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - tau * g[i];
      double ft;
      try {
        ft = fam.value(trial, a);
      } catch (const Error&) {
        tau *= kBacktrack;
        continue;
      }
      if (ft <= f - kArmijoC * tau * gn * gn) {
        accepted = true;
        break;
      }
      tau *= kBacktrack;
    }
    if (!accepted) {
      if (++stall >= kStallLimit) {
        res.stalled = true;
        break;
      }
      continue;
    }
    stall = 0;
    x_prev = x;
    g_prev = g;
    x = trial;
    f = fam.value(x, a);
    try {
      g = fam.gradient(x, a);
    } catch (const Error&) {
      res.stalled = true;
      break;
    }
    gn = norm(g);
  }
  res.x = std::move(x);
  res.grad_norm = gn;
  res.reached = gn <= eps;
  return res;
}

InnerResult flow_rk4(const SmoothingFamily& fam, Vec x, double a, double eps, int cap) {
  InnerResult res;
  double dt = 0.1;
  double gn = norm(fam.gradient(x, a));
  for (int it = 0; it < cap && gn > eps; ++it) {
    ++res.iters;
    Vec next = gradient_flow_step(fam, x, a, dt);
    if (next == x) {
      res.stalled = true;
      break;
    }
    x = std::move(next);
    gn = norm(fam.gradient(x, a));
    dt = std::min(dt * 1.2, 1.0);
  }
  res.x = std::move(x);
  res.grad_norm = gn;
  res.reached = gn <= eps;
  return res;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxOuterReached: return "MaxOuterReached";
    case SolveStatus::InnerStalled: return "InnerStalled";
  }
  return "?";
}

Vec gradient_flow_step(const SmoothingFamily& fam, const Vec& x, double a, double dt) {
  if (!(a > 0.0)) throw Error("parameter must be positive");
  if (!(dt > 0.0)) throw Error("dt must be positive");
  auto rhs = [&](const Vec& p) {
    Vec g = fam.gradient(p, a);
    for (double& v : g) v = -v;
    return g;
  };
  double f0 = fam.value(x, a);
  for (int halvings = 0; halvings < 60; ++halvings) {
    Vec k1 = rhs(x);
    Vec p2 = x;
    axpy(0.5 * dt, k1, p2);
    Vec k2 = rhs(p2);
    Vec p3 = x;
    axpy(0.5 * dt, k2, p3);
    Vec k3 = rhs(p3);
    Vec p4 = x;
    axpy(dt, k3, p4);
    Vec k4 = rhs(p4);
    Vec next = x;
    for (std::size_t i = 0; i < x.size(); ++i)
      next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (fam.value(next, a) <= f0) return next;
    dt *= 0.5;
  }
  return x;  // no decreasing step found at any dt; caller treats as a stall
}

SolverTrace smoothing_solve(const SmoothingFamily& fam, const Vec& x0,
                            const Schedule& sch, InnerSolver inner) {
  if (!all_finite(x0)) throw Error("smoothing_solve: non-finite start point");
  if (!(sch.a0 > 0.0) || !(sch.eps0 > 0.0) || !(sch.gamma_a > 0.0) ||
      sch.gamma_a >= 1.0 || !(sch.gamma_eps > 0.0) || sch.gamma_eps >= 1.0)
    throw Error("smoothing_solve: invalid schedule");

  SolverTrace trace;
  trace.final_x = x0;
  Vec x = x0;
  bool all_reached = sch.max_outer > 0;

  for (int k = 0; k < sch.max_outer; ++k) {
    double a = std::min(fam.a_max, sch.a0 * std::pow(sch.gamma_a, k));
    double eps = sch.eps0 * std::pow(sch.gamma_eps, k);
    InnerResult res = inner == InnerSolver::DescentArmijo
                          ? descent_armijo(fam, x, a, eps, sch.inner_cap)
                          : flow_rk4(fam, x, a, eps, sch.inner_cap);
    x = res.x;
    trace.final_x = x;
    if (res.stalled) {
      trace.status = SolveStatus::InnerStalled;
      return trace;
    }
    if (!res.reached) {
      // Inner budget exhausted before eps_k; report the partial trace.
      trace.status = SolveStatus::MaxOuterReached;
      return trace;
    }
    trace.outer.push_back({k, a, eps, x, res.grad_norm, res.iters});
  }
  trace.status = all_reached ? SolveStatus::Converged : SolveStatus::MaxOuterReached;
  return trace;
}

FinalCertificate certify_final(const SolverTrace& trace, const SmoothingFamily& fam,
                               const TargetFn& F, const CertifyConfig& cfg) {
  if (trace.final_x.empty()) throw Error("certify_final: empty trace");
  FinalCertificate cert;
  cert.estimate = estimate_limit_field(fam, F, trace.final_x, cfg.estimator);
  cert.report = criticality_certificate(cert.estimate, cfg.tol);
  if (fam.oscillatory && cert.report.critical)
    cert.warning = "oscillatory family: certificate vacuous";
  return cert;
}

json to_json(const SolverTrace& trace) {
  json outer = json::array();
  for (const auto& r : trace.outer)
    outer.push_back({{"k", r.k},
                     {"a", r.a},
                     {"eps", r.eps},
                     {"x", r.x},
                     {"grad_norm", r.grad_norm},
                     {"inner_iters", r.inner_iters}});
  return {{"outer", outer},
          {"final_x", trace.final_x},
          {"status", to_string(trace.status)}};
}

}  // namespace limitfield
