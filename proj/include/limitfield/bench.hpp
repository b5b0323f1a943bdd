#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "limitfield/common.hpp"
#include "limitfield/field.hpp"

namespace limitfield {

// The two-parameter set-valued field whose one-dimensional limits depend on
// the approach curve: on the manifold 2x = a1 a2 / (a1^2 + a2^2) the first
// component is 1, elsewhere the field vanishes.
struct SyntheticField {
  Vec value(double x, double a1, double a2) const;
  bool on_manifold(double x, double a1, double a2) const;
};

using ParamCurve = std::function<std::pair<double, double>(double t)>;

// First-component limits of the synthetic field along the given (a1(t), a2(t))
// curves as t -> 0, sorted and deduplicated. Valid for x in (0, 1/4].
std::vector<double> two_param_demo(double x, const std::vector<ParamCurve>& paths);

struct CaseReport {
  std::string name;
  bool pass = false;
  std::string details;  // human-readable findings
  std::vector<double> witnesses_found;
  std::vector<double> witnesses_expected;
  double tolerance = 0.0;
  double runtime_ms = 0.0;
};

struct BenchCase {
  std::string name;
  std::function<CaseReport(std::uint64_t seed)> run;
};

// The shipped reproduction suite; every case name is stable.
std::vector<BenchCase> all_cases();

// Runs the cases whose name contains `filter` (all when empty).
std::vector<CaseReport> run_bench(const std::string& filter, std::uint64_t seed);

nlohmann::json to_json(const CaseReport& report);

}  // namespace limitfield
