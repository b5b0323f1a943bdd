#include "limitfield/clarke.hpp"

#include <algorithm>
#include <cmath>

#include "limitfield/expr.hpp"

namespace limitfield {

namespace {

// Indices of envelope pieces attaining the max at t (within a relative tie
// tolerance, so breakpoints report both neighbours).
std::vector<int> active_pieces(const MaxFunction& p, double t) {
  double v = p.value(t);
  double tol = 1e-9 * (1.0 + std::abs(v) + std::abs(t));
  std::vector<int> act;
  for (std::size_t i = 0; i < p.pieces().size(); ++i)
    if (p.pieces()[i].at(t) >= v - tol) act.push_back(static_cast<int>(i));
  return act;
}

void dedupe(std::vector<Vec>& gens) {
  std::vector<Vec> out;
  for (const auto& g : gens) {
    bool dup = false;
    for (const auto& h : out) {
      if (norm(sub(g, h)) <= 1e-12 * (1.0 + norm(h))) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(g);
  }
  gens = std::move(out);
}

}  // namespace

double PiecewiseTarget::value(std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : smooth_terms) v += t.value(x);
  for (const auto& t : max_terms) v += t.coef * t.p.value(dot(t.direction, x));
  for (const auto& t : abs_pow_terms)
    v += t.coef * std::pow(std::abs(dot(t.direction, x)), t.q);
  return v;
}

std::vector<Vec> clarke_set(const PiecewiseTarget& T, std::span<const double> x) {
  if (T.exact) {
    if (auto reg = T.exact(x)) return *reg;
  }

  Vec base(T.dimension, 0.0);
  for (const auto& t : T.smooth_terms) {
    Vec g = t.grad(x);
    axpy(1.0, g, base);
  }
  for (const auto& t : T.abs_pow_terms) {
    double s = dot(t.direction, x);
    double d;
    if (s == 0.0) {
      if (t.q < 1.0) throw Error("Clarke subgradient undefined: non-Lipschitz point");
      if (t.q == 1.0) throw Error("model |t| as a max term, not abs_pow");
      d = 0.0;
    } else {
      d = t.q * std::pow(std::abs(s), t.q - 1.0) * (s > 0.0 ? 1.0 : -1.0);
    }
    axpy(t.coef * d, t.direction, base);
  }

  // Cartesian product over the active selections of every max term.
  std::vector<Vec> gens{base};
  for (const auto& t : T.max_terms) {
    double s = dot(t.direction, x);
    std::vector<int> act = active_pieces(t.p, s);
    std::vector<Vec> next;
    for (const auto& g : gens) {
      for (int i : act) {
        Vec h = g;
        axpy(t.coef * t.p.pieces()[i].slope, t.direction, h);
        next.push_back(std::move(h));
      }
    }
    gens = std::move(next);
  }
  dedupe(gens);
  return gens;
}

PiecewiseTarget builtin_target(const std::string& name, int dimension) {
  PiecewiseTarget T;
  T.name = name;
  T.dimension = dimension;
  MaxFunction abs_env = MaxFunction::build_envelope({{1.0, 0.0}, {-1.0, 0.0}});

  if (name == "abs") {
    T.max_terms.push_back({1.0, {1.0}, abs_env});
    return T;
  }
  if (name == "zero" || name == "hat") {
    // F == 0; its subgradient is {0} everywhere.
    T.smooth_terms.push_back(
        {[](std::span<const double>) { return 0.0; },
         [dimension](std::span<const double>) { return Vec(dimension, 0.0); }});
    return T;
  }
  if (name == "chen") {
    // F(t) = 2 max(0,t) - max(0,2t) == 0. The selection rule yields {0, +-2}
    // at the origin, strictly larger than the true subgradient {0}, so the
    // exact set is registered.
    MaxFunction plus = MaxFunction::build_envelope({{0.0, 0.0}, {1.0, 0.0}});
    T.max_terms.push_back({2.0, {1.0}, plus});
    MaxFunction plus2 = MaxFunction::build_envelope({{0.0, 0.0}, {2.0, 0.0}});
    T.max_terms.push_back({-1.0, {1.0}, plus2});
    T.exact = [](std::span<const double>) -> std::optional<std::vector<Vec>> {
      return std::vector<Vec>{{0.0}};  // F is identically zero
    };
    return T;
  }
  if (name == "l2_plus_abs1") {
    T.smooth_terms.push_back(
        {[](std::span<const double> x) { return dot(x, x); },
         [](std::span<const double> x) {
           Vec g(x.size());
           for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * x[i];
           return g;
         }});
    Vec e1(dimension, 0.0);
    e1[0] = 1.0;
    T.max_terms.push_back({1.0, e1, abs_env});
    return T;
  }
  if (name == "maxdemo") {
    T.max_terms.push_back({1.0, {1.0}, demo_max_function()});
    return T;
  }
  if (name == "signsqrt") {
    // sign(x) sqrt(|x|): derivative 1/(2 sqrt(|x|)) on both sides.
    T.smooth_terms.push_back(
        {[](std::span<const double> x) {
           return (x[0] >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::abs(x[0]));
         },
         [](std::span<const double> x) -> Vec {
           if (x[0] == 0.0)
             throw Error("Clarke subgradient undefined: non-Lipschitz point");
           return {0.5 / std::sqrt(std::abs(x[0]))};
         }});
    return T;
  }
  throw Error("unknown builtin target \"" + name + "\"");
}

}  // namespace limitfield
