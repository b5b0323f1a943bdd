#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "limitfield/bench.hpp"

using namespace limitfield;

TEST_CASE("synthetic field: membership and values") {
  SyntheticField f;
  // a1 = a2 = t puts x = 1/4 on the manifold for every t.
  CHECK(f.on_manifold(0.25, 0.1, 0.1));
  CHECK(f.value(0.25, 0.1, 0.1)[0] == 1.0);
  CHECK_FALSE(f.on_manifold(0.25, 0.1, 0.2));
  CHECK(f.value(0.25, 0.1, 0.2) == Vec{0.0, 0.0, 0.0});
  CHECK_FALSE(f.on_manifold(0.25, 0.0, 0.1));
  // Second and third components by the closed formula at a1 = 1, a2 = 2:
  // s = 5, a2(a1^2 - a2^2)/s^2 = 2(1-4)/25, a1(a2^2 - a1^2)/s^2 = (4-1)/25.
  Vec v = f.value(0.2, 1.0, 2.0);  // 2x s = 2 = a1 a2, on the manifold
  CHECK(v[0] == 1.0);
  CHECK(v[1] == doctest::Approx(-6.0 / 25.0));
  CHECK(v[2] == doctest::Approx(3.0 / 25.0));
}

TEST_CASE("two curves with different limits at the same point") {
  std::vector<ParamCurve> paths = {
      [](double t) { return std::pair{t, t}; },
      [](double t) { return std::pair{t, 2.0 * t}; },
  };
  CHECK(two_param_demo(0.25, paths) == std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(two_param_demo(0.3, paths), Error);
  CHECK_THROWS_AS(two_param_demo(0.0, paths), Error);
}

TEST_CASE("duplicate limits collapse") {
  std::vector<ParamCurve> paths = {
      [](double t) { return std::pair{t, t}; },
      [](double t) { return std::pair{0.5 * t, 0.5 * t}; },
  };
  CHECK(two_param_demo(0.25, paths) == std::vector<double>{1.0});
}

TEST_CASE("the full reproduction suite passes with the default seed") {
  std::vector<CaseReport> reports = run_bench("", 12345);
  CHECK(reports.size() == all_cases().size());
  for (const auto& r : reports) {
    INFO(r.name, ": ", r.details);
    CHECK(r.pass);
  }
}

TEST_CASE("filter narrows the case list") {
  std::vector<CaseReport> reports = run_bench("chen", 12345);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].name == "chen");
  CHECK(run_bench("zzz", 12345).empty());
}

TEST_CASE("case reports serialize with stable keys") {
  std::vector<CaseReport> reports = run_bench("min-norm", 12345);
  REQUIRE(reports.size() == 1);
  nlohmann::json j = to_json(reports[0]);
  CHECK(j["case"] == "min-norm");
  CHECK(j["status"] == "pass");
  CHECK(j.contains("witnesses_found"));
  CHECK(j.contains("tolerances"));
}
