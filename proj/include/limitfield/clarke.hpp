#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "limitfield/common.hpp"
#include "limitfield/kernels.hpp"

namespace limitfield {

// A locally Lipschitz target built from smooth terms plus piecewise-linear
// compositions p(<b, x>). The generators of the (superset of the) Clarke set
// at x are the gradients of all selections active at x; benchmark targets with
// a known exact subgradient register it and it takes precedence.
struct PiecewiseTarget {
  struct SmoothTerm {
    std::function<double(std::span<const double>)> value;
    std::function<Vec(std::span<const double>)> grad;
  };
  struct MaxTerm {
    double coef = 1.0;
    Vec direction;   // b
    MaxFunction p;   // applied to <b, x>
  };
  struct AbsPowTerm {  // |<b, x>|^q, non-Lipschitz at 0 when q < 1
    double coef = 1.0;
    Vec direction;
    double q = 1.0;
  };

  std::string name;
  int dimension = 1;
  std::vector<SmoothTerm> smooth_terms;
  std::vector<MaxTerm> max_terms;
  std::vector<AbsPowTerm> abs_pow_terms;
  // Registered exact Clarke generators; returns nullopt to fall back to the
  // selection-gradient rule.
  std::function<std::optional<std::vector<Vec>>(std::span<const double>)> exact;

  double value(std::span<const double> x) const;
};

// Generators whose convex hull contains (and at regular points equals) the
// Clarke subgradient of T at x. Throws on non-Lipschitz points.
std::vector<Vec> clarke_set(const PiecewiseTarget& T, std::span<const double> x);

// Benchmark targets: "abs", "chen", "hat", "zero", "l2_plus_abs1", "maxdemo",
// "signsqrt".
PiecewiseTarget builtin_target(const std::string& name, int dimension = 1);

}  // namespace limitfield
