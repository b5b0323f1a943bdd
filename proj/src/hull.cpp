#include "limitfield/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace limitfield {

namespace {

constexpr double kRidge = 1e-12;

// Solves the dense system M z = rhs in place by Gaussian elimination with
// partial pivoting. M is (n x n) row-major.
bool solve_dense(std::vector<double>& M, std::vector<double>& rhs, int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(M[r * n + col]) > std::abs(M[piv * n + col])) piv = r;
    if (std::abs(M[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(M[piv * n + c], M[col * n + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = M[r * n + col] / M[col * n + col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) M[r * n + c] -= f * M[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double s = rhs[col];
    for (int c = col + 1; c < n; ++c) s -= M[col * n + c] * rhs[c];
    rhs[col] = s / M[col * n + col];
  }
  return true;
}

// Min-norm point over the affine hull of the selected points: KKT system for
// min |S v|^2 subject to sum v = 1, with a small ridge against affine
// dependence. Returns the affine weights (may be negative).
std::vector<double> affine_min_norm(const std::vector<Vec>& pts,
                                    const std::vector<int>& idx) {
  int m = static_cast<int>(idx.size());
  int n = m + 1;
  std::vector<double> M(n * n, 0.0), rhs(n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j)
      M[i * n + j] = dot(pts[idx[i]], pts[idx[j]]) + (i == j ? kRidge : 0.0);
    M[i * n + m] = 1.0;
    M[m * n + i] = 1.0;
  }
  rhs[m] = 1.0;
  if (!solve_dense(M, rhs, n)) {
    // Degenerate corral: fall back to the uniform combination.
    return std::vector<double>(m, 1.0 / m);
  }
  rhs.resize(m);
  return rhs;
}

Vec combine(const std::vector<Vec>& pts, const std::vector<int>& idx,
            const std::vector<double>& w) {
  Vec x(pts[0].size(), 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) axpy(w[i], pts[idx[i]], x);
  return x;
}

}  // namespace

MinNormResult min_norm_point(const std::vector<Vec>& points, double tol) {
  if (points.empty()) throw Error("min_norm_point: empty point set");
  if (!(tol > 0.0)) throw Error("min_norm_point: tol must be positive");
  const int m = static_cast<int>(points.size());

  if (m == 1) {
    return {norm(points[0]), points[0], {1.0}};
  }

  // Start from the input point of smallest norm.
  int start = 0;
  for (int i = 1; i < m; ++i)
    if (norm(points[i]) < norm(points[start])) start = i;

  std::vector<int> corral{start};
  std::vector<double> w{1.0};
  Vec x = points[start];

  auto result = [&]() {
    MinNormResult r;
    r.distance = norm(x);
    r.point = x;
    r.weights.assign(m, 0.0);
    for (std::size_t i = 0; i < corral.size(); ++i) r.weights[corral[i]] = w[i];
    return r;
  };

  const int max_major = 16 * m + 100;
  for (int major = 0; major < max_major; ++major) {
    double xx = dot(x, x);
    // Linear minimization oracle, ties broken by lowest index.
    int best = 0;
    double bestdot = dot(x, points[0]);
    for (int i = 1; i < m; ++i) {
      double d = dot(x, points[i]);
      if (d < bestdot - 1e-15 * (1.0 + std::abs(bestdot))) {
        bestdot = d;
        best = i;
      }
    }
    if (bestdot >= xx - tol * (1.0 + std::sqrt(xx))) return result();
    if (std::find(corral.begin(), corral.end(), best) != corral.end()) return result();

    corral.push_back(best);
    w.push_back(0.0);

    // Minor cycle: restore a corral whose affine minimizer has positive weights.
    for (int minor = 0; minor < 2 * m + 10; ++minor) {
      std::vector<double> v = affine_min_norm(points, corral);
      double vmin = *std::min_element(v.begin(), v.end());
      if (vmin > -1e-12) {
        w = v;
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] <= 0.0 && w[i] - v[i] > 0.0)
          theta = std::min(theta, w[i] / (w[i] - v[i]));
      }
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += theta * (v[i] - w[i]);
      std::vector<int> keep_idx;
      std::vector<double> keep_w;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 1e-12) {
          keep_idx.push_back(corral[i]);
          keep_w.push_back(w[i]);
        }
      }
      if (keep_idx.empty()) {  // numerical corner, keep the entering point
        keep_idx.push_back(best);
        keep_w.push_back(1.0);
      }
      corral = std::move(keep_idx);
      w = std::move(keep_w);
    }
    double sw = 0.0;
    for (double wi : w) sw += wi;
    for (double& wi : w) wi /= sw;
    x = combine(points, corral, w);
  }

  // Frank-Wolfe fallback: slower but safe when Wolfe cycles numerically.
  std::vector<double> full(m, 0.0);
  for (std::size_t i = 0; i < corral.size(); ++i) full[corral[i]] = w[i];
  for (int it = 0; it < 200000; ++it) {
    int best = 0;
    double bestdot = dot(x, points[0]);
    for (int i = 1; i < m; ++i) {
      double d = dot(x, points[i]);
      if (d < bestdot) {
        bestdot = d;
        best = i;
      }
    }
    Vec dir = sub(points[best], x);
    double gap = -dot(x, dir);
    if (gap <= tol * (1.0 + norm(x))) break;
    double denom = dot(dir, dir);
    if (denom <= 0.0) break;
    double gamma = std::clamp(gap / denom, 0.0, 1.0);
    for (double& f : full) f *= (1.0 - gamma);
    full[best] += gamma;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += gamma * dir[i];
  }
  MinNormResult r;
  r.distance = norm(x);
  r.point = x;
  r.weights = full;
  return r;
}

double hull_distance(const std::vector<Vec>& points, const Vec& q, double tol) {
  std::vector<Vec> shifted(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) shifted[i] = sub(points[i], q);
  return min_norm_point(shifted, tol).distance;
}

}  // namespace limitfield
