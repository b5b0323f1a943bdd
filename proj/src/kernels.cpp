#include "limitfield/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace limitfield {

namespace {

double intersect(const AffinePiece& lo, const AffinePiece& hi) {
  return (lo.intercept - hi.intercept) / (hi.slope - lo.slope);
}

// Composite Simpson over [lo, hi]; exact for piecewise cubics when the mesh
// resolves the pieces.
double simpson(double lo, double hi, int n, const auto& f) {
  double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double a = lo + i * h, b = a + h;
    s += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  }
  return s;
}

}  // namespace

MaxFunction MaxFunction::build_envelope(std::vector<AffinePiece> pieces) {
  if (pieces.empty()) throw Error("empty max-function");
  for (const auto& p : pieces) {
    if (!std::isfinite(p.slope) || !std::isfinite(p.intercept))
      throw Error("non-finite piece in max-function");
  }
  std::sort(pieces.begin(), pieces.end(), [](const AffinePiece& a, const AffinePiece& b) {
    if (a.slope != b.slope) return a.slope < b.slope;
    return a.intercept < b.intercept;
  });
  // Equal slopes: only the largest intercept can appear on the envelope.
  std::vector<AffinePiece> dedup;
  for (const auto& p : pieces) {
    if (!dedup.empty() && dedup.back().slope == p.slope) dedup.back() = p;
    else dedup.push_back(p);
  }

  std::vector<AffinePiece> env;
  for (const auto& p : dedup) {
    while (env.size() >= 2) {
      const AffinePiece& l1 = env[env.size() - 2];
      const AffinePiece& l2 = env.back();
      double x = intersect(l1, p);
      // l2 survives only if it rises above the crossing of its neighbours.
      if (l2.at(x) > l1.at(x)) break;
      env.pop_back();
    }
    env.push_back(p);
  }

  MaxFunction out;
  out.pieces_ = std::move(env);
  for (std::size_t i = 0; i + 1 < out.pieces_.size(); ++i)
    out.breaks_.push_back(intersect(out.pieces_[i], out.pieces_[i + 1]));
  return out;
}

int MaxFunction::active_index(double t) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  return static_cast<int>(it - breaks_.begin());
}

double MaxFunction::value(double t) const {
  return pieces_[active_index(t)].at(t);
}

bool MaxFunction::at_breakpoint(double t) const {
  for (double b : breaks_)
    if (std::abs(t - b) <= 1e-12 * (1.0 + std::abs(b))) return true;
  return false;
}

double MaxFunction::derivative(double t) const {
  if (at_breakpoint(t)) throw KinkError("kink evaluation");
  return pieces_[active_index(t)].slope;
}

double MaxFunction::lipschitz_bound() const {
  double m = 0.0;
  for (const auto& p : pieces_) m = std::max(m, std::abs(p.slope));
  return m;
}

Kernel Kernel::make(KernelKind kind) {
  Kernel k;
  k.kind = kind;
  if (kind == KernelKind::Uniform) {
    // With density 1 on [-1/2, 1/2] the absolute moment is 1/4; the one-sided
    // moment 1/8 is what shows up as the Huber constant a/8.
    k.half_width = 0.5;
    k.abs_moment = 0.25;
  } else {
    k.half_width = 1.0;
    k.abs_moment = 1.0 / 3.0;
  }
  // Cross-check mass and absolute moment by quadrature (split at the apex so
  // Simpson integrates each polynomial piece exactly).
  auto piece_integral = [&](const auto& f) {
    return simpson(-k.half_width, 0.0, 64, f) + simpson(0.0, k.half_width, 64, f);
  };
  double mass = piece_integral([&](double u) { return k.density(u); });
  double mom = piece_integral([&](double u) { return std::abs(u) * k.density(u); });
  if (std::abs(mass - 1.0) > 1e-12 || std::abs(mom - k.abs_moment) > 1e-12)
    throw Error("kernel moment verification failed");
  return k;
}

double Kernel::density(double u) const {
  if (kind == KernelKind::Uniform) return std::abs(u) <= half_width ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - std::abs(u));
}

ValueDeriv conv_smooth(const MaxFunction& p, const Kernel& k, double t, double a) {
  if (!(a > 0.0)) throw Error("parameter must be positive");
  const double hw = k.half_width;
  std::vector<double> cuts{-hw, hw};
  if (k.kind == KernelKind::Triangular) cuts.push_back(0.0);
  for (double b : p.breakpoints()) {
    double u = (t - b) / a;
    if (u > -hw && u < hw) cuts.push_back(u);
  }
  std::sort(cuts.begin(), cuts.end());

  ValueDeriv out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double u0 = cuts[i], u1 = cuts[i + 1];
    if (u1 <= u0) continue;
    double um = 0.5 * (u0 + u1);
    const AffinePiece& pc = p.pieces()[p.active_index(t - a * um)];
    auto g = [&](double u) { return pc.at(t - a * u) * k.density(u); };
    // One Simpson node set per sub-interval; the integrands are polynomials of
    // degree <= 2 there, so this is exact.
    out.value += (u1 - u0) / 6.0 * (g(u0) + 4.0 * g(um) + g(u1));
    out.deriv += pc.slope * (u1 - u0) / 6.0 *
                 (k.density(u0) + 4.0 * k.density(um) + k.density(u1));
  }
  return out;
}

const char* to_string(ScalarKernelKind kind) {
  switch (kind) {
    case ScalarKernelKind::HuberPlus: return "huber_plus";
    case ScalarKernelKind::SqrtPlus: return "sqrt_plus";
    case ScalarKernelKind::SoftPlus: return "soft_plus";
    case ScalarKernelKind::HuberAbs: return "huber_abs";
    case ScalarKernelKind::SqrtAbs: return "sqrt_abs";
    case ScalarKernelKind::ConvMax: return "conv_max";
  }
  return "?";
}

ValueDeriv closed_form_kernel(ScalarKernelKind kind, double t, double a) {
  if (!(a > 0.0)) throw Error("parameter must be positive");
  switch (kind) {
    case ScalarKernelKind::HuberPlus: {
      if (std::abs(t) >= 0.5 * a)
        return {std::max(0.0, t), t > 0.0 ? 1.0 : 0.0};
      return {t * t / (2.0 * a) + 0.5 * t + a / 8.0, t / a + 0.5};
    }
    case ScalarKernelKind::SqrtPlus: {
      double r = std::sqrt(t * t + 4.0 * a * a);
      return {0.5 * (t + r), 0.5 * (1.0 + t / r)};
    }
    case ScalarKernelKind::SoftPlus: {
      double z = t / a;
      if (z > 30.0) return {t + a * std::exp(-z), 1.0 - std::exp(-z)};
      if (z < -30.0) return {a * std::exp(z), std::exp(z)};
      return {a * std::log1p(std::exp(z)), 1.0 / (1.0 + std::exp(-z))};
    }
    case ScalarKernelKind::HuberAbs: {
      if (std::abs(t) > a) return {std::abs(t), t > 0.0 ? 1.0 : -1.0};
      return {t * t / (2.0 * a) + 0.5 * a, t / a};
    }
    case ScalarKernelKind::SqrtAbs: {
      double r = std::sqrt(t * t + a * a);
      return {r, t / r};
    }
    case ScalarKernelKind::ConvMax:
      throw Error("conv_max kernel requires a max-function");
  }
  throw Error("unknown kernel kind");
}

SmoothScalarKernel::SmoothScalarKernel(ScalarKernelKind kind) : kind_(kind) {
  if (kind == ScalarKernelKind::ConvMax)
    throw Error("conv_max kernel requires a max-function");
}

SmoothScalarKernel::SmoothScalarKernel(MaxFunction p, Kernel window)
    : kind_(ScalarKernelKind::ConvMax),
      max_(std::make_shared<MaxFunction>(std::move(p))),
      window_(std::make_shared<Kernel>(window)) {}

ValueDeriv SmoothScalarKernel::eval(double t, double a) const {
  if (kind_ == ScalarKernelKind::ConvMax) return conv_smooth(*max_, *window_, t, a);
  return closed_form_kernel(kind_, t, a);
}

}  // namespace limitfield
