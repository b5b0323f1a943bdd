#pragma once

#include <vector>

#include "limitfield/common.hpp"

namespace limitfield {

struct MinNormResult {
  double distance = 0.0;
  Vec point;                    // p* = sum_i w_i s_i
  std::vector<double> weights;  // convex coefficients over the input points
};

// Min-norm point in conv(points): Wolfe's method with a Frank-Wolfe fallback
// after a fixed iteration cap. The result satisfies the first-order optimality
// certificate <p*, s_i - p*> >= -tol*(1 + |p*|) for every input point.
MinNormResult min_norm_point(const std::vector<Vec>& points, double tol = 1e-9);

// Distance from q to conv(points).
double hull_distance(const std::vector<Vec>& points, const Vec& q, double tol = 1e-9);

}  // namespace limitfield
