#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "limitfield/clarke.hpp"
#include "limitfield/common.hpp"
#include "limitfield/expr.hpp"

namespace limitfield {

// One retained gradient observation (x_n, a_n, f_{a_n}(x_n), g_n).
struct GradientSample {
  Vec x;
  double a = 0.0;
  double value = 0.0;
  Vec grad;
  double grad_norm = 0.0;
  int level = 0;
};

// Extra sample points x_n(x, a_n); counterexample witnesses live on specific
// curves that random sampling misses.
using ProbeCurve = std::function<Vec(const Vec& x, double a)>;

struct EstimatorConfig {
  double a0 = std::numeric_limits<double>::quiet_NaN();  // NaN: use fam.a_max
  double sigma = 0.5;
  int levels = 30;
  int replicas = 64;
  // Sample radii shrink like c * a^beta; two exponents cover fast and slow
  // approach curves.
  std::vector<double> radius_exponents{1.0, 0.5};
  double radius_scale = 1.0;
  double merge_radius = 1e-2;
  double blow_up_threshold = 1e6;
  double value_tol = 1e-3;
  std::uint64_t seed = 12345;
  std::vector<ProbeCurve> probes;
};

struct GradientCluster {
  Vec center;
  int weight = 0;                // sample count
  std::vector<int> levels;       // sorted, distinct levels that fed the cluster
};

struct LimitFieldEstimate {
  Vec x;
  std::vector<GradientCluster> clusters;
  std::vector<Vec> horizontal;   // unit blow-up directions
  bool blow_up = false;
  double hull_distance = std::numeric_limits<double>::infinity();
  int samples_used = 0;
  int value_filter_rejections = 0;
  std::vector<int> rejections_by_level;
  std::vector<int> retained_by_level;
  std::uint64_t seed = 0;
};

// Samples gradients of f_a on shrinking (x_n, a_n) schedules, filters by the
// value-tracking condition |f_{a_n}(x_n) - F(x)| <= value_tol (1 + |F(x)|),
// and clusters the limits. Empty clusters are a legitimate outcome.
LimitFieldEstimate estimate_limit_field(const SmoothingFamily& fam, const TargetFn& F,
                                        const Vec& x, const EstimatorConfig& cfg);

struct CriticalityReport {
  bool critical = false;
  double hull_distance = 0.0;
  Vec min_norm_point;
  std::vector<double> witness_weights;  // convex weights over cluster centers
};

// Certifies dist(0, conv of cluster centers) <= tol. Throws
// "empty estimate: no certificate" when there are no clusters.
CriticalityReport criticality_certificate(const LimitFieldEstimate& est, double tol);

// Piecewise-linear path [0,1] -> R^d; parameter is split evenly across
// segments.
struct PolylinePath {
  std::vector<Vec> nodes;
  Vec at(double t) const;
  Vec velocity(double t) const;
};

// |f_a(x(1)) - f_a(x(0)) - trapezoid quadrature of <grad f_a(x(t)), x'(t)>|.
double verify_path_integral(const SmoothingFamily& fam, double a,
                            const PolylinePath& curve, int steps);

struct Box {
  Vec lo, hi;
};

struct ConsistencyScan {
  double fraction_consistent = 0.0;
  int trials = 0;
  std::vector<Vec> inconsistent_points;
};

// Fraction of uniform points in `box` where every cluster center lies within
// cons_tol of the convex hull of the Clarke generators.
ConsistencyScan gradient_consistency_scan(const SmoothingFamily& fam,
                                          const PiecewiseTarget& clarke, const Box& box,
                                          int trials, const EstimatorConfig& cfg,
                                          double cons_tol);

// True when every cluster center of `est` is within cons_tol of conv of the
// Clarke generators at est.x.
bool consistent_at(const LimitFieldEstimate& est, const PiecewiseTarget& clarke,
                   double cons_tol);

nlohmann::json to_json(const LimitFieldEstimate& est, const EstimatorConfig& cfg);
nlohmann::json to_json(const CriticalityReport& rep);

}  // namespace limitfield
