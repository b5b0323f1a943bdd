#include <doctest.h>

#include <cmath>
#include <random>

#include "limitfield/hull.hpp"
#include "oracles.hpp"

using namespace limitfield;

TEST_CASE("singleton and symmetric pairs") {
  MinNormResult one = min_norm_point({{2.0}});
  CHECK(one.distance == doctest::Approx(2.0));
  CHECK(one.weights == std::vector<double>{1.0});

  MinNormResult pair = min_norm_point({{-1.0}, {1.0}});
  CHECK(pair.distance == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pair.weights[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(pair.weights[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("segment not through the origin") {
  MinNormResult r = min_norm_point({{1.0, 0.0}, {0.0, 1.0}});
  CHECK(r.distance == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(r.point[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.point[1] == doctest::Approx(0.5).epsilon(1e-7));
  // Cross-check against the dense weight grid.
  CHECK(r.distance == doctest::Approx(oracles::min_norm_by_grid({{1.0, 0.0}, {0.0, 1.0}}))
                          .epsilon(1e-3));
}

TEST_CASE("origin interior gives zero distance") {
  MinNormResult r =
      min_norm_point({{1.0, 1.0}, {-1.0, 1.0}, {0.0, -2.0}});
  CHECK(r.distance == doctest::Approx(0.0).epsilon(1e-8));
  double wsum = 0.0;
  for (double w : r.weights) {
    CHECK(w >= -1e-12);
    wsum += w;
  }
  CHECK(wsum == doctest::Approx(1.0));
}

TEST_CASE("random instances agree with the subset-enumeration oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> msize(1, 6), dim(1, 3);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    int m = msize(rng), d = dim(rng);
    std::vector<Vec> pts(m, Vec(d));
    for (auto& p : pts)
      for (double& c : p) c = coord(rng);
    MinNormResult r = min_norm_point(pts);
    double ref = oracles::min_norm_by_subsets(pts);
    CHECK(r.distance == doctest::Approx(ref).epsilon(1e-3));

    // First-order optimality: no input point improves on p*.
    double xx = dot(r.point, r.point);
    for (const auto& s : pts)
      CHECK(dot(r.point, s) >= xx - 1e-7 * (1.0 + xx));

    // Weights reconstruct the reported point.
    Vec rec(d, 0.0);
    for (int i = 0; i < m; ++i) axpy(r.weights[i], pts[i], rec);
    CHECK(norm(sub(rec, r.point)) <= 1e-8 * (1.0 + norm(r.point)));
  }
}

TEST_CASE("hull_distance to a shifted query") {
  double dist = hull_distance({{0.0, 0.0}, {2.0, 0.0}}, {1.0, 1.0});
  CHECK(dist == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("empty input rejected") {
  CHECK_THROWS_AS(min_norm_point({}), Error);
}
