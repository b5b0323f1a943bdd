#include <doctest.h>

#include <cmath>
#include <random>

#include "limitfield/kernels.hpp"
#include "oracles.hpp"

using namespace limitfield;

TEST_CASE("envelope removes dominated pieces and orders by slope") {
  // max(0, t, 2t - 1) plus a piece strictly below the others.
  MaxFunction p = MaxFunction::build_envelope(
      {{2.0, -1.0}, {0.0, 0.0}, {1.0, 0.0}, {1.0, -5.0}});
  REQUIRE(p.pieces().size() == 3);
  CHECK(p.pieces()[0].slope == 0.0);
  CHECK(p.pieces()[1].slope == 1.0);
  CHECK(p.pieces()[2].slope == 2.0);
  REQUIRE(p.breakpoints().size() == 2);
  CHECK(p.breakpoints()[0] == doctest::Approx(0.0));
  CHECK(p.breakpoints()[1] == doctest::Approx(1.0));
}

TEST_CASE("envelope value equals max over raw pieces") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AffinePiece> raw;
    int n = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) raw.push_back({coef(rng), coef(rng)});
    MaxFunction p = MaxFunction::build_envelope(raw);
    for (int i = 0; i <= 200; ++i) {
      double t = -5.0 + 10.0 * i / 200.0;
      double brute = -1e300;
      for (const auto& pc : raw) brute = std::max(brute, pc.at(t));
      CHECK(p.value(t) == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("breakpoint derivative throws, nearby points do not") {
  MaxFunction p = MaxFunction::build_envelope({{0.0, 0.0}, {1.0, 0.0}});
  CHECK_THROWS_AS(p.derivative(0.0), KinkError);
  CHECK(p.derivative(-0.1) == 0.0);
  CHECK(p.derivative(0.1) == 1.0);
  CHECK(p.lipschitz_bound() == 1.0);
}

TEST_CASE("envelope rejects empty and non-finite input") {
  CHECK_THROWS_AS(MaxFunction::build_envelope({}), Error);
  CHECK_THROWS_AS(MaxFunction::build_envelope({{std::nan(""), 0.0}}), Error);
}

TEST_CASE("kernels carry verified mass and absolute moment") {
  Kernel u = Kernel::make(KernelKind::Uniform);
  CHECK(u.abs_moment == doctest::Approx(0.25));
  Kernel t = Kernel::make(KernelKind::Triangular);
  CHECK(t.abs_moment == doctest::Approx(1.0 / 3.0));
  CHECK(u.density(0.4) == 1.0);
  CHECK(u.density(0.6) == 0.0);
  CHECK(t.density(0.5) == doctest::Approx(0.5));
}

TEST_CASE("conv_smooth of plus part reproduces the quadratic ramp") {
  MaxFunction plus = MaxFunction::build_envelope({{0.0, 0.0}, {1.0, 0.0}});
  Kernel uni = Kernel::make(KernelKind::Uniform);
  for (double a : {1.0, 0.1}) {
    for (int i = 0; i <= 400; ++i) {
      double t = -2.0 + 4.0 * i / 400.0;
      ValueDeriv c = conv_smooth(plus, uni, t, a);
      ValueDeriv f = closed_form_kernel(ScalarKernelKind::HuberPlus, t, a);
      CHECK(c.value == doctest::Approx(f.value).epsilon(1e-13));
      CHECK(c.deriv == doctest::Approx(f.deriv).epsilon(1e-13));
    }
  }
}

TEST_CASE("conv_smooth matches adaptive quadrature on random max-functions") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    MaxFunction p = oracles::random_max_function(rng);
    for (KernelKind kind : {KernelKind::Uniform, KernelKind::Triangular}) {
      Kernel k = Kernel::make(kind);
      for (double a : {1.0, 0.3}) {
        for (double t : {-1.7, -0.2, 0.0, 0.45, 2.3}) {
          double ref = oracles::conv_by_quadrature(p, k, t, a);
          CHECK(conv_smooth(p, k, t, a).value == doctest::Approx(ref).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("smoothing preserves the Lipschitz bound of the envelope") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    MaxFunction p = oracles::random_max_function(rng);
    double bound = p.lipschitz_bound() + 1e-9;
    for (KernelKind kind : {KernelKind::Uniform, KernelKind::Triangular}) {
      Kernel k = Kernel::make(kind);
      for (double a : {1.0, 0.05}) {
        for (int i = 0; i <= 500; ++i) {
          double t = -6.0 + 12.0 * i / 500.0;
          CHECK(std::abs(conv_smooth(p, k, t, a).deriv) <= bound);
        }
      }
    }
  }
}

TEST_CASE("uniform convergence: sup |s_a - p| <= a L moment") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    MaxFunction p = oracles::random_max_function(rng);
    for (KernelKind kind : {KernelKind::Uniform, KernelKind::Triangular}) {
      Kernel k = Kernel::make(kind);
      for (double a : {1.0, 0.1, 0.01}) {
        double bound = a * p.lipschitz_bound() * k.abs_moment + 1e-12;
        for (int i = 0; i <= 400; ++i) {
          double t = -4.0 + 8.0 * i / 400.0;
          CHECK(std::abs(conv_smooth(p, k, t, a).value - p.value(t)) <= bound);
        }
      }
    }
  }
}

TEST_CASE("closed forms: values verified against hand evaluation") {
  // Huber ramp inside the transition zone.
  ValueDeriv h = closed_form_kernel(ScalarKernelKind::HuberPlus, 0.0, 1.0);
  CHECK(h.value == doctest::Approx(0.125));
  CHECK(h.deriv == doctest::Approx(0.5));
  // smooth abs value at 0 is a/2.
  ValueDeriv ab = closed_form_kernel(ScalarKernelKind::HuberAbs, 0.0, 0.4);
  CHECK(ab.value == doctest::Approx(0.2));
  CHECK(ab.deriv == doctest::Approx(0.0));
  // sqrt-based plus part: (t + sqrt(t^2 + 4a^2)) / 2 at t=0 is a.
  ValueDeriv s = closed_form_kernel(ScalarKernelKind::SqrtPlus, 0.0, 1.0);
  CHECK(s.value == doctest::Approx(1.0));
  // softplus at 0 is a ln 2.
  ValueDeriv sp = closed_form_kernel(ScalarKernelKind::SoftPlus, 0.0, 2.0);
  CHECK(sp.value == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(sp.deriv == doctest::Approx(0.5));
}

TEST_CASE("closed forms: derivative matches finite differences") {
  for (ScalarKernelKind kind :
       {ScalarKernelKind::HuberPlus, ScalarKernelKind::SqrtPlus,
        ScalarKernelKind::SoftPlus, ScalarKernelKind::HuberAbs,
        ScalarKernelKind::SqrtAbs}) {
    for (double a : {1.0, 0.2}) {
      for (double t : {-1.3, -0.01, 0.27, 2.0}) {
        double h = 1e-6;
        double fd = (closed_form_kernel(kind, t + h, a).value -
                     closed_form_kernel(kind, t - h, a).value) /
                    (2.0 * h);
        CHECK(closed_form_kernel(kind, t, a).deriv == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("softplus stays finite far from the transition") {
  ValueDeriv big = closed_form_kernel(ScalarKernelKind::SoftPlus, 1e6, 0.5);
  CHECK(std::isfinite(big.value));
  CHECK(big.value == doctest::Approx(1e6));
  ValueDeriv small = closed_form_kernel(ScalarKernelKind::SoftPlus, -1e6, 0.5);
  CHECK(small.value == doctest::Approx(0.0));
}

TEST_CASE("nonpositive parameter rejected") {
  MaxFunction plus = MaxFunction::build_envelope({{0.0, 0.0}, {1.0, 0.0}});
  Kernel uni = Kernel::make(KernelKind::Uniform);
  CHECK_THROWS_WITH_AS(conv_smooth(plus, uni, 0.0, 0.0), "parameter must be positive",
                       Error);
  CHECK_THROWS_AS(closed_form_kernel(ScalarKernelKind::HuberAbs, 0.0, -1.0), Error);
}

TEST_CASE("SmoothScalarKernel routes conv_max through the window") {
  MaxFunction p = MaxFunction::build_envelope({{0.0, 0.0}, {1.0, 0.0}, {2.0, -1.0}});
  SmoothScalarKernel k(p, Kernel::make(KernelKind::Uniform));
  ValueDeriv direct = conv_smooth(p, *k.window(), 0.3, 0.2);
  ValueDeriv via = k.eval(0.3, 0.2);
  CHECK(via.value == direct.value);
  CHECK(via.deriv == direct.deriv);
  CHECK_THROWS_AS(SmoothScalarKernel(ScalarKernelKind::ConvMax), Error);
}
