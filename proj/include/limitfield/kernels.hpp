#pragma once

#include <memory>
#include <string>
#include <vector>

#include "limitfield/common.hpp"

namespace limitfield {

// One affine piece a*t + b of a finite max-function.
struct AffinePiece {
  double slope = 0.0;
  double intercept = 0.0;

  double at(double t) const { return slope * t + intercept; }
};

// Upper envelope of finitely many affine pieces, p(t) = max_i (a_i t + b_i).
// Pieces on the envelope are sorted by strictly increasing slope and the
// breakpoints are the abscissas where adjacent pieces exchange dominance.
class MaxFunction {
 public:
  // Builds the envelope from an arbitrary piece list (dominated pieces are
  // removed). Throws Error("empty max-function") on an empty input.
  static MaxFunction build_envelope(std::vector<AffinePiece> pieces);

  double value(double t) const;
  // Index into pieces() of the piece attaining the max at t (rightmost on ties).
  int active_index(double t) const;
  // Slope of the active piece; throws KinkError exactly at a breakpoint.
  double derivative(double t) const;
  bool at_breakpoint(double t) const;

  // max_i |slope_i| over envelope pieces; the Lipschitz constant of p and of
  // every kernel-convolved smoothing of p.
  double lipschitz_bound() const;

  const std::vector<AffinePiece>& pieces() const { return pieces_; }
  const std::vector<double>& breakpoints() const { return breaks_; }

 private:
  MaxFunction() = default;
  std::vector<AffinePiece> pieces_;
  std::vector<double> breaks_;
};

enum class KernelKind { Uniform, Triangular };

// Symmetric averaging window with unit mass and bounded support. The absolute
// moment is stored and cross-checked by quadrature at construction.
struct Kernel {
  KernelKind kind = KernelKind::Uniform;
  double half_width = 0.5;
  double abs_moment = 0.25;  // Uniform: 1/4, Triangular: 1/3

  static Kernel make(KernelKind kind);
  double density(double u) const;
};

struct ValueDeriv {
  double value = 0.0;
  double deriv = 0.0;
};

// Convolution smoothing of a max-function: s(t) = integral of p(t - a u) w(u).
// Evaluated in closed form by splitting the window at the images of the
// breakpoints; exact for both window kinds. Throws on a <= 0.
ValueDeriv conv_smooth(const MaxFunction& p, const Kernel& k, double t, double a);

enum class ScalarKernelKind { HuberPlus, SqrtPlus, SoftPlus, HuberAbs, SqrtAbs, ConvMax };

const char* to_string(ScalarKernelKind kind);

// Named closed-form smoothings (ConvMax is not valid here). Throws on a <= 0.
ValueDeriv closed_form_kernel(ScalarKernelKind kind, double t, double a);

// A C^1-in-t scalar smoothing s_a(t) with exact derivative; immutable.
class SmoothScalarKernel {
 public:
  explicit SmoothScalarKernel(ScalarKernelKind kind);
  SmoothScalarKernel(MaxFunction p, Kernel window);

  ValueDeriv eval(double t, double a) const;

  ScalarKernelKind kind() const { return kind_; }
  const MaxFunction* max_function() const { return max_.get(); }
  const Kernel* window() const { return window_.get(); }

 private:
  ScalarKernelKind kind_;
  std::shared_ptr<const MaxFunction> max_;
  std::shared_ptr<const Kernel> window_;
};

}  // namespace limitfield
