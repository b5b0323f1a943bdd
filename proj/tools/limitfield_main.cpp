#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "limitfield/bench.hpp"
#include "limitfield/expr.hpp"
#include "limitfield/field.hpp"
#include "limitfield/solver.hpp"

namespace {

using limitfield::Vec;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitBench = 4;

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&now));
  return buf;
}

// Output envelope; everything except `metadata` is a pure function of the
// command line (including the seed), so reruns are byte-identical after
// dropping `metadata`.
void emit(const std::string& command, const json& payload, const std::string& out_path) {
  json envelope{{"schema", "limitfield/v1"},
                {"command", command},
                {"payload", payload},
                {"metadata", {{"timestamp", iso_timestamp()}}}};
  std::string text = envelope.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out_path);
    if (!f) throw limitfield::Error("cannot open output file: " + out_path);
    f << text;
  }
}

void emit_csv(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out_path);
    if (!f) throw limitfield::Error("cannot open output file: " + out_path);
    f << text;
  }
}

// A family argument is either a builtin name or a path to a JSON definition.
limitfield::SmoothingFamily load_family(const std::string& spec) {
  for (const auto& name : limitfield::builtin_family_names())
    if (name == spec) return limitfield::builtin_family(spec);
  std::ifstream f(spec);
  if (!f) throw limitfield::Error("family parse error: no builtin or readable file named '" + spec + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw limitfield::Error(std::string("family parse error: ") + e.what());
  }
  limitfield::SmoothingFamily fam = limitfield::SmoothingFamily::from_json(j);
  fam.name = spec;
  return fam;
}

// JSON families carry no exact target; fall back to evaluating at the end of
// the level schedule, which is within value_tol of F for any smoothing family.
limitfield::TargetFn target_or_fallback(const limitfield::SmoothingFamily& fam,
                                        const limitfield::EstimatorConfig& cfg) {
  if (fam.target) return fam.target;
  double a0 = std::isnan(cfg.a0) ? fam.a_max : cfg.a0;
  double a_end = a0 * std::pow(cfg.sigma, cfg.levels + 4);
  return [&fam, a_end](std::span<const double> x) { return fam.value(x, a_end); };
}

struct CommonOpts {
  std::string format = "json";
  std::string out;
  std::uint64_t seed = 12345;
  int workers = 0;  // accepted for forward compatibility; all cases are serial
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd->add_option("--out", opts.out, "Write output to this file instead of stdout");
  cmd->add_option("--seed", opts.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--workers", opts.workers, "Worker count (0 = auto)");
}

void add_estimator_opts(CLI::App* cmd, limitfield::EstimatorConfig& cfg) {
  cmd->add_option("--a0", cfg.a0, "Initial level (default: family a_max)");
  cmd->add_option("--sigma", cfg.sigma, "Level shrink factor")->capture_default_str();
  cmd->add_option("--levels", cfg.levels, "Number of a-levels")->capture_default_str();
  cmd->add_option("--replicas", cfg.replicas, "Random samples per level")
      ->capture_default_str();
  cmd->add_option("--radius-scale", cfg.radius_scale, "Sample radius scale")
      ->capture_default_str();
  cmd->add_option("--merge-radius", cfg.merge_radius, "Cluster merge radius")
      ->capture_default_str();
  cmd->add_option("--blow-up-threshold", cfg.blow_up_threshold,
                  "Gradient norm treated as blow-up")
      ->capture_default_str();
  cmd->add_option("--value-tol", cfg.value_tol, "Value-tracking tolerance")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothing families: evaluation, limit-field estimation, solving"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override file values");
  app.config_formatter(std::make_shared<CLI::ConfigTOML>());

  // smooth: grid dump of (t, a, value, derivative) for a 1-d family.
  auto* smooth = app.add_subcommand("smooth", "Evaluate a family on a t-grid");
  CommonOpts smooth_opts;
  smooth_opts.format = "csv";
  std::string smooth_family;
  double t_min = -2.0, t_max = 2.0;
  int t_steps = 101;
  std::vector<double> a_list{1.0, 0.1};
  smooth->add_option("family", smooth_family, "Builtin name or JSON file")->required();
  smooth->add_option("--t-min", t_min)->capture_default_str();
  smooth->add_option("--t-max", t_max)->capture_default_str();
  smooth->add_option("--t-steps", t_steps)->check(CLI::PositiveNumber)
      ->capture_default_str();
  smooth->add_option("--a", a_list, "Smoothing levels")->capture_default_str();
  add_common(smooth, smooth_opts);

  // estimate: limit field at a point.
  auto* estimate = app.add_subcommand("estimate", "Estimate the gradient-limit field");
  CommonOpts est_opts;
  std::string est_family;
  std::vector<double> est_at{0.0};
  limitfield::EstimatorConfig est_cfg;
  double cert_tol = 1e-3;
  estimate->add_option("family", est_family, "Builtin name or JSON file")->required();
  estimate->add_option("--at", est_at, "Evaluation point")->capture_default_str();
  estimate->add_option("--tol", cert_tol, "Criticality tolerance")
      ->capture_default_str();
  add_estimator_opts(estimate, est_cfg);
  add_common(estimate, est_opts);

  // solve: outer smoothing loop plus final certificate.
  auto* solve = app.add_subcommand("solve", "Run the smoothing method");
  CommonOpts solve_opts;
  std::string solve_family;
  std::vector<double> x0{1.0};
  limitfield::Schedule sched;
  limitfield::CertifyConfig certify;
  std::string inner = "descent";
  solve->add_option("family", solve_family, "Builtin name or JSON file")->required();
  solve->add_option("--x0", x0, "Start point")->capture_default_str();
  solve->add_option("--a0", sched.a0)->capture_default_str();
  solve->add_option("--eps0", sched.eps0)->capture_default_str();
  solve->add_option("--gamma-a", sched.gamma_a)->capture_default_str();
  solve->add_option("--gamma-eps", sched.gamma_eps)->capture_default_str();
  solve->add_option("--max-outer", sched.max_outer)->capture_default_str();
  solve->add_option("--inner-cap", sched.inner_cap)->capture_default_str();
  solve->add_option("--inner", inner, "Inner solver")
      ->check(CLI::IsMember({"descent", "flow"}))
      ->capture_default_str();
  solve->add_option("--tol", certify.tol, "Criticality tolerance")
      ->capture_default_str();
  add_common(solve, solve_opts);

  // bench: the shipped reproduction cases.
  auto* bench = app.add_subcommand("bench", "Run the reproduction suite");
  CommonOpts bench_opts;
  std::string filter;
  bench->add_option("--filter", filter, "Only cases whose name contains this");
  add_common(bench, bench_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*smooth) {
      limitfield::SmoothingFamily fam = load_family(smooth_family);
      if (fam.dimension != 1)
        throw limitfield::Error("smooth requires a one-dimensional family");
      struct Row {
        double t, a, value, deriv;
      };
      std::vector<Row> rows;
      for (double a : a_list)
        for (int i = 0; i < t_steps; ++i) {
          double t = t_steps == 1 ? t_min
                                  : t_min + (t_max - t_min) * i / (t_steps - 1);
          Vec x{t};
          double v = fam.value(x, a);
          double d;
          try {
            d = fam.gradient(x, a)[0];
          } catch (const limitfield::KinkError&) {
            d = std::numeric_limits<double>::quiet_NaN();
          }
          rows.push_back({t, a, v, d});
        }
      if (smooth_opts.format == "csv") {
        std::ostringstream os;
        os << "t,a,value,deriv\n";
        os.precision(17);
        for (const auto& r : rows)
          os << r.t << ',' << r.a << ',' << r.value << ',' << r.deriv << '\n';
        emit_csv(os.str(), smooth_opts.out);
      } else {
        json payload = json::array();
        for (const auto& r : rows)
          payload.push_back(
              {{"t", r.t}, {"a", r.a}, {"value", r.value}, {"deriv", r.deriv}});
        emit("smooth", payload, smooth_opts.out);
      }
      return kExitOk;
    }

    if (*estimate) {
      limitfield::SmoothingFamily fam = load_family(est_family);
      est_cfg.seed = est_opts.seed;
      limitfield::TargetFn target = target_or_fallback(fam, est_cfg);
      limitfield::LimitFieldEstimate est =
          limitfield::estimate_limit_field(fam, target, est_at, est_cfg);
      json payload = limitfield::to_json(est, est_cfg);
      if (!est.clusters.empty())
        payload["certificate"] =
            limitfield::to_json(limitfield::criticality_certificate(est, cert_tol));
      if (est_opts.format == "csv") {
        std::ostringstream os;
        os << "cluster,weight,center\n";
        os.precision(17);
        for (std::size_t i = 0; i < est.clusters.size(); ++i) {
          os << i << ',' << est.clusters[i].weight;
          for (double c : est.clusters[i].center) os << ',' << c;
          os << '\n';
        }
        emit_csv(os.str(), est_opts.out);
      } else {
        emit("estimate", payload, est_opts.out);
      }
      return kExitOk;  // an empty estimate is data, not an error
    }

    if (*solve) {
      limitfield::SmoothingFamily fam = load_family(solve_family);
      limitfield::InnerSolver which = inner == "flow"
                                          ? limitfield::InnerSolver::GradientFlowRK4
                                          : limitfield::InnerSolver::DescentArmijo;
      limitfield::SolverTrace trace = limitfield::smoothing_solve(fam, x0, sched, which);
      certify.estimator.seed = solve_opts.seed;
      limitfield::TargetFn target = target_or_fallback(fam, certify.estimator);
      limitfield::FinalCertificate cert =
          limitfield::certify_final(trace, fam, target, certify);
      json payload = limitfield::to_json(trace);
      payload["estimate"] = limitfield::to_json(cert.estimate, certify.estimator);
      if (!cert.estimate.clusters.empty())
        payload["certificate"] = limitfield::to_json(cert.report);
      if (!cert.warning.empty()) payload["warning"] = cert.warning;
      if (solve_opts.format == "csv") {
        std::ostringstream os;
        os << "k,a,eps,grad_norm,inner_iters,x\n";
        os.precision(17);
        for (const auto& r : trace.outer) {
          os << r.k << ',' << r.a << ',' << r.eps << ',' << r.grad_norm << ','
             << r.inner_iters;
          for (double c : r.x) os << ',' << c;
          os << '\n';
        }
        emit_csv(os.str(), solve_opts.out);
      } else {
        emit("solve", payload, solve_opts.out);
      }
      return trace.status == limitfield::SolveStatus::Converged ? kExitOk : kExitSolver;
    }

    if (*bench) {
      std::vector<limitfield::CaseReport> reports =
          limitfield::run_bench(filter, bench_opts.seed);
      bool all_pass = true;
      for (const auto& r : reports) all_pass = all_pass && r.pass;
      if (bench_opts.format == "csv") {
        std::ostringstream os;
        os << "case,status,runtime_ms\n";
        for (const auto& r : reports)
          os << r.name << ',' << (r.pass ? "pass" : "fail") << ',' << r.runtime_ms
             << '\n';
        emit_csv(os.str(), bench_opts.out);
      } else {
        json payload = json::array();
        for (const auto& r : reports) {
          json jr = limitfield::to_json(r);
          jr.erase("runtime_ms");  // keep the payload reproducible byte for byte
          payload.push_back(jr);
        }
        emit("bench", payload, bench_opts.out);
      }
      return all_pass ? kExitOk : kExitBench;
    }
  } catch (const limitfield::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return kExitOk;
}
