#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "limitfield/clarke.hpp"

using namespace limitfield;

namespace {

std::vector<double> sorted_first(const std::vector<Vec>& gens) {
  std::vector<double> v;
  for (const auto& g : gens) v.push_back(g[0]);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("absolute value: signs away from 0, both at 0") {
  PiecewiseTarget abs = builtin_target("abs");
  CHECK(abs.value(Vec{-2.5}) == doctest::Approx(2.5));
  CHECK(sorted_first(clarke_set(abs, Vec{1.0})) == std::vector<double>{1.0});
  CHECK(sorted_first(clarke_set(abs, Vec{-1.0})) == std::vector<double>{-1.0});
  CHECK(sorted_first(clarke_set(abs, Vec{0.0})) == std::vector<double>{-1.0, 1.0});
}

TEST_CASE("chen target: selection rule overridden by the registered exact set") {
  PiecewiseTarget chen = builtin_target("chen");
  CHECK(chen.value(Vec{0.7}) == doctest::Approx(0.0));
  CHECK(chen.value(Vec{-0.7}) == doctest::Approx(0.0));
  // Without the registration the selection generators at 0 would include +-2.
  CHECK(sorted_first(clarke_set(chen, Vec{0.0})) == std::vector<double>{0.0});
  CHECK(sorted_first(clarke_set(chen, Vec{0.4})) == std::vector<double>{0.0});
}

TEST_CASE("smooth plus one kink in two dimensions") {
  PiecewiseTarget t = builtin_target("l2_plus_abs1", 2);
  CHECK(t.value(Vec{1.0, 2.0}) == doctest::Approx(6.0));
  auto at_kink = clarke_set(t, Vec{0.0, 1.0});
  REQUIRE(at_kink.size() == 2);
  std::vector<double> first = sorted_first(at_kink);
  CHECK(first[0] == doctest::Approx(-1.0));
  CHECK(first[1] == doctest::Approx(1.0));
  for (const auto& g : at_kink) CHECK(g[1] == doctest::Approx(2.0));

  auto regular = clarke_set(t, Vec{0.5, -1.0});
  REQUIRE(regular.size() == 1);
  CHECK(regular[0][0] == doctest::Approx(2.0));
  CHECK(regular[0][1] == doctest::Approx(-2.0));
}

TEST_CASE("three-piece envelope reports both slopes at each breakpoint") {
  PiecewiseTarget t = builtin_target("maxdemo");
  CHECK(sorted_first(clarke_set(t, Vec{-1.0})) == std::vector<double>{0.0});
  CHECK(sorted_first(clarke_set(t, Vec{0.0})) == std::vector<double>{0.0, 1.0});
  CHECK(sorted_first(clarke_set(t, Vec{0.5})) == std::vector<double>{1.0});
  CHECK(sorted_first(clarke_set(t, Vec{1.0})) == std::vector<double>{1.0, 2.0});
  CHECK(sorted_first(clarke_set(t, Vec{3.0})) == std::vector<double>{2.0});
}

TEST_CASE("non-Lipschitz points are refused") {
  PiecewiseTarget ss = builtin_target("signsqrt");
  CHECK(clarke_set(ss, Vec{0.25})[0][0] == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(clarke_set(ss, Vec{0.0}),
                       "Clarke subgradient undefined: non-Lipschitz point", Error);

  PiecewiseTarget q;
  q.dimension = 1;
  q.abs_pow_terms.push_back({1.0, {1.0}, 0.5});
  CHECK_THROWS_AS(clarke_set(q, Vec{0.0}), Error);
  CHECK(clarke_set(q, Vec{4.0})[0][0] == doctest::Approx(0.25 / std::sqrt(4.0) * 2.0));
}

TEST_CASE("zero target has subgradient {0}") {
  PiecewiseTarget z = builtin_target("hat", 1);
  CHECK(z.value(Vec{0.3}) == 0.0);
  auto gens = clarke_set(z, Vec{0.3});
  REQUIRE(gens.size() == 1);
  CHECK(gens[0][0] == 0.0);
}

TEST_CASE("unknown target rejected") {
  CHECK_THROWS_AS(builtin_target("nope"), Error);
}
