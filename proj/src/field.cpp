#include "limitfield/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "limitfield/hull.hpp"

namespace limitfield {

using json = nlohmann::json;

namespace {

// Deterministic direction set: +-e_i, and for small d the diagonals.
std::vector<Vec> deterministic_rays(int d) {
  std::vector<Vec> rays;
  for (int i = 0; i < d; ++i) {
    Vec e(d, 0.0);
    e[i] = 1.0;
    rays.push_back(e);
    e[i] = -1.0;
    rays.push_back(e);
  }
  if (d >= 2 && d <= 4) {
    int combos = 1 << d;
    double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (int m = 0; m < combos; ++m) {
      Vec v(d);
      for (int i = 0; i < d; ++i) v[i] = (m >> i) & 1 ? s : -s;
      rays.push_back(v);
    }
  }
  return rays;
}

Vec random_unit(std::mt19937_64& rng, int d) {
  if (d == 1) return {rng() & 1 ? 1.0 : -1.0};
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(d);
  double n = 0.0;
  do {
    for (double& c : v) c = gauss(rng);
    n = norm(v);
  } while (n < 1e-12);
  for (double& c : v) c /= n;
  return v;
}

struct ClusterAccum {
  Vec sum;
  Vec center;
  int weight = 0;
  std::vector<int> levels;

  void add(const Vec& g, int level) {
    if (weight == 0) sum.assign(g.size(), 0.0);
    axpy(1.0, g, sum);
    ++weight;
    center = sum;
    for (double& c : center) c /= weight;
    if (levels.empty() || levels.back() != level) levels.push_back(level);
  }
};

void greedy_merge(std::vector<ClusterAccum>& clusters, const Vec& g, int level,
                  double radius) {
  for (auto& c : clusters) {
    if (norm(sub(g, c.center)) <= radius) {
      c.add(g, level);
      return;
    }
  }
  ClusterAccum fresh;
  fresh.add(g, level);
  clusters.push_back(std::move(fresh));
}

}  // namespace

LimitFieldEstimate estimate_limit_field(const SmoothingFamily& fam, const TargetFn& F,
                                        const Vec& x, const EstimatorConfig& cfg) {
  if (!all_finite(x)) throw Error("estimate_limit_field: non-finite point");
  if (cfg.levels < 1 || cfg.replicas < 0 || !(cfg.sigma > 0.0 && cfg.sigma < 1.0))
    throw Error("estimate_limit_field: invalid config");
  if (!F) throw Error("estimate_limit_field: target callback required");

  const int d = fam.dimension;
  const double a0 = std::isnan(cfg.a0) ? fam.a_max : cfg.a0;
  const double Fx = F(x);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  LimitFieldEstimate est;
  est.x = x;
  est.seed = cfg.seed;
  est.rejections_by_level.assign(cfg.levels, 0);
  est.retained_by_level.assign(cfg.levels, 0);

  const std::vector<Vec> rays = deterministic_rays(d);
  std::vector<GradientSample> samples;
  std::vector<Vec> horizontal_raw;

  for (int level = 0; level < cfg.levels; ++level) {
    double a = a0 * std::pow(cfg.sigma, level);
    std::vector<Vec> points;
    for (double beta : cfg.radius_exponents) {
      double r = cfg.radius_scale * std::pow(a, beta);
      for (const Vec& u : rays) {
        Vec p = x;
        axpy(r, u, p);
        points.push_back(std::move(p));
      }
      for (int rep = 0; rep < cfg.replicas; ++rep) {
        // Random direction with a random radius fraction in (0, 1]; a fixed
        // radius would visit only 2 points per level in dimension one.
        Vec u = random_unit(rng, d);
        double s = 1.0 - unif(rng);
        Vec p = x;
        axpy(r * s, u, p);
        points.push_back(std::move(p));
      }
    }
    for (const ProbeCurve& probe : cfg.probes) points.push_back(probe(x, a));

    for (const Vec& p : points) {
      double v;
      Vec g;
      try {
        v = fam.value(p, a);
        g = fam.gradient(p, a);
      } catch (const Error&) {
        continue;  // kinks and domain violations are skipped, not fatal
      }
      if (std::abs(v - Fx) > cfg.value_tol * (1.0 + std::abs(Fx))) {
        ++est.value_filter_rejections;
        ++est.rejections_by_level[level];
        continue;
      }
      double gn = norm(g);
      if (gn > cfg.blow_up_threshold) {
        est.blow_up = true;
        Vec dir = g;
        for (double& c : dir) c /= gn;
        horizontal_raw.push_back(std::move(dir));
        continue;
      }
      ++est.retained_by_level[level];
      samples.push_back({p, a, v, std::move(g), gn, level});
    }
  }

  // Greedy clustering in gradient space, in deterministic sample order.
  std::vector<ClusterAccum> clusters;
  for (const auto& s : samples) greedy_merge(clusters, s.grad, s.level, cfg.merge_radius);

  // Persistence: a genuine limit point must be fed by the smallest sampled
  // a-levels, not just by mid-scale transients.
  std::vector<int> populated;
  for (int level = 0; level < cfg.levels; ++level)
    if (est.retained_by_level[level] > 0) populated.push_back(level);
  std::vector<int> required(populated.end() - std::min<std::size_t>(3, populated.size()),
                            populated.end());

  for (const auto& c : clusters) {
    bool keep = !required.empty();
    for (int lv : required)
      keep = keep && std::binary_search(c.levels.begin(), c.levels.end(), lv);
    if (keep) est.clusters.push_back({c.center, c.weight, c.levels});
  }
  est.samples_used = static_cast<int>(samples.size());

  // Blow-up directions, deduped and renormalized.
  std::vector<ClusterAccum> hclusters;
  for (const auto& h : horizontal_raw) greedy_merge(hclusters, h, 0, cfg.merge_radius);
  for (auto& c : hclusters) {
    double n = norm(c.center);
    if (n > 0.0)
      for (double& v : c.center) v /= n;
    est.horizontal.push_back(c.center);
  }

  if (!est.clusters.empty()) {
    std::vector<Vec> centers;
    for (const auto& c : est.clusters) centers.push_back(c.center);
    est.hull_distance = min_norm_point(centers).distance;
  }
  return est;
}

CriticalityReport criticality_certificate(const LimitFieldEstimate& est, double tol) {
  if (est.clusters.empty()) throw Error("empty estimate: no certificate");
  std::vector<Vec> centers;
  for (const auto& c : est.clusters) centers.push_back(c.center);
  MinNormResult mn = min_norm_point(centers);
  CriticalityReport rep;
  rep.hull_distance = mn.distance;
  rep.critical = mn.distance <= tol;
  rep.min_norm_point = mn.point;
  rep.witness_weights = mn.weights;
  return rep;
}

Vec PolylinePath::at(double t) const {
  if (nodes.empty()) throw Error("empty path");
  if (nodes.size() == 1) return nodes.front();
  int nseg = static_cast<int>(nodes.size()) - 1;
  double s = std::clamp(t, 0.0, 1.0) * nseg;
  int seg = std::min(static_cast<int>(s), nseg - 1);
  double local = s - seg;
  Vec p(nodes[seg].size());
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = (1.0 - local) * nodes[seg][i] + local * nodes[seg + 1][i];
  return p;
}

Vec PolylinePath::velocity(double t) const {
  if (nodes.size() < 2) return Vec(nodes.empty() ? 0 : nodes.front().size(), 0.0);
  int nseg = static_cast<int>(nodes.size()) - 1;
  double s = std::clamp(t, 0.0, 1.0) * nseg;
  int seg = std::min(static_cast<int>(s), nseg - 1);
  Vec v(nodes[seg].size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = (nodes[seg + 1][i] - nodes[seg][i]) * nseg;
  return v;
}

double verify_path_integral(const SmoothingFamily& fam, double a,
                            const PolylinePath& curve, int steps) {
  if (steps < 1) throw Error("verify_path_integral: steps must be >= 1");
  // Trapezoid per segment so the velocity jump at interior path nodes never
  // straddles a quadrature cell.
  int nseg = std::max(1, static_cast<int>(curve.nodes.size()) - 1);
  int per_seg = std::max(1, steps / nseg);
  double quad = 0.0;
  for (int s = 0; s < nseg; ++s) {
    double t0 = static_cast<double>(s) / nseg;
    double t1 = static_cast<double>(s + 1) / nseg;
    double h = (t1 - t0) / per_seg;
    Vec v = curve.velocity(0.5 * (t0 + t1));  // constant along the segment
    auto grad_dot_v = [&](double t) {
      try {
        return dot(fam.gradient(curve.at(t), a), v);
      } catch (const KinkError&) {
        throw KinkError("kink evaluation along curve at t=" + std::to_string(t));
      }
    };
    double prev = grad_dot_v(t0);
    for (int i = 1; i <= per_seg; ++i) {
      double cur = grad_dot_v(t0 + i * h);
      quad += 0.5 * h * (prev + cur);
      prev = cur;
    }
  }
  double delta = fam.value(curve.at(1.0), a) - fam.value(curve.at(0.0), a);
  return std::abs(delta - quad);
}

bool consistent_at(const LimitFieldEstimate& est, const PiecewiseTarget& clarke,
                   double cons_tol) {
  if (est.clusters.empty()) return true;  // empty set is trivially contained
  std::vector<Vec> gens = clarke_set(clarke, est.x);
  for (const auto& c : est.clusters) {
    if (hull_distance(gens, c.center) > cons_tol) return false;
  }
  return true;
}

ConsistencyScan gradient_consistency_scan(const SmoothingFamily& fam,
                                          const PiecewiseTarget& clarke, const Box& box,
                                          int trials, const EstimatorConfig& cfg,
                                          double cons_tol) {
  if (box.lo.size() != box.hi.size() ||
      static_cast<int>(box.lo.size()) != fam.dimension)
    throw Error("gradient_consistency_scan: box dimension mismatch");
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TargetFn F = fam.target;
  if (!F) throw Error("gradient_consistency_scan: family has no target");

  ConsistencyScan scan;
  scan.trials = trials;
  int ok = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Vec x(fam.dimension);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unif(rng);
    EstimatorConfig local = cfg;
    local.seed = cfg.seed + 1000003ull * static_cast<std::uint64_t>(trial + 1);
    LimitFieldEstimate est = estimate_limit_field(fam, F, x, local);
    if (consistent_at(est, clarke, cons_tol)) ++ok;
    else scan.inconsistent_points.push_back(x);
  }
  scan.fraction_consistent = trials > 0 ? static_cast<double>(ok) / trials : 1.0;
  return scan;
}

json to_json(const LimitFieldEstimate& est, const EstimatorConfig& cfg) {
  json clusters = json::array();
  for (const auto& c : est.clusters)
    clusters.push_back({{"center", c.center}, {"weight", c.weight}});
  json horizontal = json::array();
  for (const auto& h : est.horizontal) horizontal.push_back(h);
  json jcfg = {{"a0", std::isnan(cfg.a0) ? json() : json(cfg.a0)},
               {"sigma", cfg.sigma},
               {"levels", cfg.levels},
               {"replicas", cfg.replicas},
               {"radius_exponents", cfg.radius_exponents},
               {"radius_scale", cfg.radius_scale},
               {"merge_radius", cfg.merge_radius},
               {"blow_up_threshold", cfg.blow_up_threshold},
               {"value_tol", cfg.value_tol}};
  return {{"x", est.x},
          {"clusters", clusters},
          {"horizontal", horizontal},
          {"blow_up", est.blow_up},
          {"hull_distance", std::isinf(est.hull_distance) ? json("inf")
                                                          : json(est.hull_distance)},
          {"samples_used", est.samples_used},
          {"value_filter_rejections", est.value_filter_rejections},
          {"config", jcfg},
          {"seed", est.seed}};
}

json to_json(const CriticalityReport& rep) {
  return {{"critical", rep.critical},
          {"hull_distance", rep.hull_distance},
          {"min_norm_point", rep.min_norm_point},
          {"witness_weights", rep.witness_weights}};
}

}  // namespace limitfield
