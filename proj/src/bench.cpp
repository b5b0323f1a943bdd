#include "limitfield/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "limitfield/clarke.hpp"
#include "limitfield/expr.hpp"
#include "limitfield/hull.hpp"
#include "limitfield/kernels.hpp"
#include "limitfield/solver.hpp"

namespace limitfield {

using json = nlohmann::json;

Vec SyntheticField::value(double x, double a1, double a2) const {
  if (on_manifold(x, a1, a2)) {
    double s = a1 * a1 + a2 * a2;
    return {1.0, a2 * (a1 * a1 - a2 * a2) / (s * s), a1 * (a2 * a2 - a1 * a1) / (s * s)};
  }
  return {0.0, 0.0, 0.0};
}

bool SyntheticField::on_manifold(double x, double a1, double a2) const {
  if (a1 * a2 == 0.0) return false;
  double s = a1 * a1 + a2 * a2;
  // Tolerance scales with s: both sides of the membership equation are O(s)
  // near (0, 0), so an absolute cutoff would absorb every curve eventually.
  return std::abs(2.0 * x * s - a1 * a2) <= 1e-9 * s;
}

std::vector<double> two_param_demo(double x, const std::vector<ParamCurve>& paths) {
  if (!(x > 0.0 && x <= 0.25)) throw Error("two_param_demo: x must lie in (0, 1/4]");
  SyntheticField field;
  std::vector<double> limits;
  for (const auto& path : paths) {
    double limit = 0.0;
    bool stable = true;
    double prev = 0.0;
    for (int j = 1; j <= 40; ++j) {
      double t = std::pow(0.5, j);
      auto [a1, a2] = path(t);
      double v = field.value(x, a1, a2)[0];
      if (j > 35) stable = stable && std::abs(v - prev) <= 1e-9;
      prev = v;
      limit = v;
    }
    if (!stable) continue;  // no limit along this curve
    bool seen = false;
    for (double l : limits) seen = seen || std::abs(l - limit) <= 1e-9;
    if (!seen) limits.push_back(limit);
  }
  std::sort(limits.begin(), limits.end());
  return limits;
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

CaseReport finish(CaseReport r, const Timer& timer) {
  r.runtime_ms = timer.ms();
  return r;
}

double cluster_min(const LimitFieldEstimate& est) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : est.clusters) m = std::min(m, c.center[0]);
  return m;
}

double cluster_max(const LimitFieldEstimate& est) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& c : est.clusters) m = std::max(m, c.center[0]);
  return m;
}

bool has_cluster_near(const LimitFieldEstimate& est, double v, double tol) {
  for (const auto& c : est.clusters)
    if (std::abs(c.center[0] - v) <= tol) return true;
  return false;
}

CaseReport case_huber_conv(std::uint64_t) {
  Timer timer;
  CaseReport r;
  r.name = "huber-conv";
  // Witness: the uniform-window convolution of max(0, t) is the quadratic
  // Huber ramp; the two evaluation routes must agree to near machine.
  MaxFunction plus = MaxFunction::build_envelope({{0.0, 0.0}, {1.0, 0.0}});
  Kernel uni = Kernel::make(KernelKind::Uniform);
  double worst = 0.0;
  for (double a : {1.0, 0.1}) {
    for (int i = 0; i < 1000; ++i) {
      double t = -3.0 + 6.0 * i / 999.0;
      ValueDeriv conv = conv_smooth(plus, uni, t, a);
      ValueDeriv cf = closed_form_kernel(ScalarKernelKind::HuberPlus, t, a);
      worst = std::max({worst, std::abs(conv.value - cf.value),
                        std::abs(conv.deriv - cf.deriv)});
    }
  }
  r.tolerance = 1e-12;
  r.witnesses_found = {worst};
  r.witnesses_expected = {0.0};
  r.pass = worst <= r.tolerance;
  r.details = "max |conv - closed form| = " + std::to_string(worst);
  return finish(std::move(r), timer);
}

CaseReport case_min_norm(std::uint64_t) {
  Timer timer;
  CaseReport r;
  r.name = "min-norm";
  // Witness: dist(0, conv{(1,0), (0,1)}) = sqrt(1/2), derived by direct
  // minimization over the segment.
  MinNormResult mn = min_norm_point({{1.0, 0.0}, {0.0, 1.0}});
  double expected = std::sqrt(0.5);
  r.tolerance = 1e-9;
  r.witnesses_found = {mn.distance};
  r.witnesses_expected = {expected};
  r.pass = std::abs(mn.distance - expected) <= r.tolerance;
  return finish(std::move(r), timer);
}

CaseReport case_sin(std::uint64_t seed) {
  Timer timer;
  CaseReport r;
  r.name = "sin";
  // Witness: the limit set at any x != 0 spans [-1, 1].
  SmoothingFamily fam = builtin_family(BuiltinFamily::OscillatingSin);
  EstimatorConfig cfg;
  cfg.seed = seed;
  LimitFieldEstimate est = estimate_limit_field(fam, fam.target, {0.5}, cfg);
  double lo = cluster_min(est), hi = cluster_max(est);
  r.tolerance = 0.05;
  r.witnesses_found = {lo, hi};
  r.witnesses_expected = {-1.0, 1.0};
  r.pass = lo <= -0.95 && hi >= 0.95;
  std::ostringstream os;
  os << "cluster span [" << lo << ", " << hi << "] from " << est.clusters.size()
     << " clusters";
  r.details = os.str();
  return finish(std::move(r), timer);
}

CaseReport case_hat(std::uint64_t seed) {
  Timer timer;
  CaseReport r;
  r.name = "hat";
  // Witnesses at 0: -1 from the probe x_n = a_n/2 (slope of a - |x| on
  // (0, a)), +1 from the mirrored probe, 0 from |x| >= a.
  SmoothingFamily fam = builtin_family(BuiltinFamily::Hat);
  EstimatorConfig cfg;
  cfg.seed = seed;
  cfg.probes = {[](const Vec& x, double a) { return Vec{x[0] + 0.5 * a}; },
                [](const Vec& x, double a) { return Vec{x[0] - 0.5 * a}; },
                [](const Vec& x, double a) { return Vec{x[0] + 2.0 * a}; }};
  LimitFieldEstimate est = estimate_limit_field(fam, fam.target, {0.0}, cfg);
  r.tolerance = 1e-3;
  r.witnesses_expected = {-1.0, 0.0, 1.0};
  bool found = has_cluster_near(est, -1.0, 1e-3) && has_cluster_near(est, 0.0, 1e-3) &&
               has_cluster_near(est, 1.0, 1e-3);
  bool critical = false;
  double hd = est.hull_distance;
  if (!est.clusters.empty()) {
    CriticalityReport cert = criticality_certificate(est, 1e-6);
    critical = cert.critical;
    hd = cert.hull_distance;
  }
  for (const auto& c : est.clusters) r.witnesses_found.push_back(c.center[0]);
  r.pass = found && critical;
  std::ostringstream os;
  os << "hull_distance = " << hd;
  r.details = os.str();
  return finish(std::move(r), timer);
}

CaseReport case_chen(std::uint64_t seed) {
  Timer timer;
  CaseReport r;
  r.name = "chen";
  // Witness: the derivative along t = a is constant in a; its value
  // 1/sqrt(5) - 1/sqrt(2) is recomputed here rather than hardcoded.
  SmoothingFamily fam = builtin_family(BuiltinFamily::Chen);
  double expected = fam.gradient(Vec{0.25}, 0.25)[0];  // t = a evaluation
  EstimatorConfig cfg;
  cfg.seed = seed;
  cfg.merge_radius = 1e-9;  // keep the witness cluster unpolluted
  cfg.probes = {[](const Vec& x, double a) { return Vec{x[0] + a}; }};
  LimitFieldEstimate est = estimate_limit_field(fam, fam.target, {0.0}, cfg);
  r.tolerance = 1e-6;
  r.witnesses_expected = {expected};
  r.pass = has_cluster_near(est, expected, r.tolerance);
  for (const auto& c : est.clusters) r.witnesses_found.push_back(c.center[0]);

  // The registered exact subgradient {0} makes the origin inconsistent.
  PiecewiseTarget clarke = builtin_target("chen");
  EstimatorConfig scan_cfg;
  scan_cfg.seed = seed;
  scan_cfg.probes = cfg.probes;
  LimitFieldEstimate at0 = estimate_limit_field(fam, fam.target, {0.0}, scan_cfg);
  bool flagged = !consistent_at(at0, clarke, 1e-3);
  r.pass = r.pass && flagged;
  r.details = flagged ? "origin flagged inconsistent" : "origin NOT flagged";
  return finish(std::move(r), timer);
}

CaseReport case_signsqrt(std::uint64_t seed) {
  Timer timer;
  CaseReport r;
  r.name = "signsqrt";
  // Witness: gradients blow up along every value-tracking sequence into 0, so
  // the limit set is empty and the horizontal direction is +1.
  SmoothingFamily fam = builtin_family(BuiltinFamily::SignSqrt);
  EstimatorConfig cfg;
  cfg.seed = seed;
  cfg.levels = 60;  // deep enough for 1/(2 sqrt(a)) to cross the threshold
  cfg.probes = {[](const Vec& x, double) { return x; }};
  LimitFieldEstimate est = estimate_limit_field(fam, fam.target, {0.0}, cfg);
  r.tolerance = 1e-9;
  r.witnesses_expected = {1.0};
  for (const auto& h : est.horizontal) r.witnesses_found.push_back(h[0]);
  r.pass = est.clusters.empty() && est.blow_up && est.horizontal.size() == 1 &&
           std::abs(est.horizontal[0][0] - 1.0) <= 1e-9;
  std::ostringstream os;
  os << est.clusters.size() << " clusters, blow_up=" << est.blow_up;
  r.details = os.str();
  return finish(std::move(r), timer);
}

CaseReport case_two_param(std::uint64_t) {
  Timer timer;
  CaseReport r;
  r.name = "two-param";
  // Witness derivation: along a1 = a2 = t the manifold equation reads
  // t^2 / (2 t^2) = 1/2, i.e. x = 1/4 identically, so the field sticks at 1;
  // along a1 = t, a2 = 2t membership fails and the field vanishes.
  std::vector<ParamCurve> paths = {
      [](double t) { return std::pair{t, t}; },
      [](double t) { return std::pair{t, 2.0 * t}; },
  };
  std::vector<double> limits = two_param_demo(0.25, paths);
  r.tolerance = 0.0;
  r.witnesses_found = limits;
  r.witnesses_expected = {0.0, 1.0};
  r.pass = limits == std::vector<double>{0.0, 1.0};
  return finish(std::move(r), timer);
}

CaseReport case_abs_solve(std::uint64_t seed) {
  Timer timer;
  CaseReport r;
  r.name = "abs-solve";
  // Witness: every smoothed |x| has its unique minimum at 0.
  SmoothingFamily fam = builtin_family(BuiltinFamily::AbsHuber);
  SolverTrace trace = smoothing_solve(fam, {3.0}, Schedule{});
  CertifyConfig ccfg;
  ccfg.estimator.seed = seed;
  FinalCertificate cert = certify_final(trace, fam, fam.target, ccfg);
  r.tolerance = 1e-3;
  r.witnesses_found = {trace.final_x[0]};
  r.witnesses_expected = {0.0};
  r.pass = trace.status == SolveStatus::Converged &&
           std::abs(trace.final_x[0]) <= 1e-3 && cert.report.critical;
  std::ostringstream os;
  os << "status=" << to_string(trace.status) << " hull=" << cert.report.hull_distance;
  r.details = os.str();
  return finish(std::move(r), timer);
}

CaseReport case_nlq_solve(std::uint64_t) {
  Timer timer;
  CaseReport r;
  r.name = "nlq-solve";
  // Witness: t^2 + sqrt(|t|) is strictly increasing in |t|, so the target
  // minimizer is the origin.
  SmoothingFamily fam = builtin_family(BuiltinFamily::NonLipschitzQ);
  SolverTrace trace = smoothing_solve(fam, {1.0, 1.0}, Schedule{});
  r.tolerance = 1e-3;
  r.witnesses_found = trace.final_x;
  r.witnesses_expected = {0.0, 0.0};
  r.pass = std::abs(trace.final_x[0]) <= 1e-3 && std::abs(trace.final_x[1]) <= 1e-3;
  r.details = std::string("status=") + to_string(trace.status);
  return finish(std::move(r), timer);
}

}  // namespace

std::vector<BenchCase> all_cases() {
  return {
      {"huber-conv", case_huber_conv},
      {"min-norm", case_min_norm},
      {"sin", case_sin},
      {"hat", case_hat},
      {"chen", case_chen},
      {"signsqrt", case_signsqrt},
      {"two-param", case_two_param},
      {"abs-solve", case_abs_solve},
      {"nlq-solve", case_nlq_solve},
  };
}

std::vector<CaseReport> run_bench(const std::string& filter, std::uint64_t seed) {
  std::vector<CaseReport> reports;
  for (const auto& c : all_cases()) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    reports.push_back(c.run(seed));
  }
  std::sort(reports.begin(), reports.end(),
            [](const CaseReport& a, const CaseReport& b) { return a.name < b.name; });
  return reports;
}

json to_json(const CaseReport& report) {
  return {{"case", report.name},
          {"status", report.pass ? "pass" : "fail"},
          {"witnesses_found", report.witnesses_found},
          {"witnesses_expected", report.witnesses_expected},
          {"tolerances", report.tolerance},
          {"details", report.details},
          {"runtime_ms", report.runtime_ms}};
}

}  // namespace limitfield
