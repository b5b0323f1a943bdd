#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "limitfield/common.hpp"
#include "limitfield/kernels.hpp"

namespace limitfield {

enum class Op {
  Const, Var, Param,
  Add, Sub, Mul, Div, Neg,
  Dot,
  Sin, Cos, Exp, Log, Sqrt,
  PowRational, AbsPow,
  Kernel, MaxExact, Apply
};

struct Rational {
  long num = 0;
  long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// User-supplied smooth scalar map with exact derivative (Apply nodes).
struct ScalarMap {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

struct ExprNode {
  Op op = Op::Const;
  double constant = 0.0;
  int var_index = -1;
  int arg0 = -1, arg1 = -1;
  std::vector<double> weights;  // Dot
  Rational exponent;            // PowRational / AbsPow
  int table_index = -1;         // Kernel / MaxExact / Apply
};

// A DAG of scalar operations defining (x, a) -> f_a(x). Nodes are stored in
// topological (construction) order; evaluation is one forward sweep and the
// gradient one reverse sweep with a held constant.
class ExprGraph {
 public:
  using Id = int;

  Id constant(double c);
  Id var(int index);
  Id param();
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id div(Id a, Id b);
  Id neg(Id a);
  Id dot(std::vector<double> weights);
  Id sin(Id a);
  Id cos(Id a);
  Id exp(Id a);
  Id log(Id a);
  Id sqrt(Id a);
  Id pow_rational(Id a, long num, long den);
  Id abs_pow(Id a, long num, long den);
  Id kernel(SmoothScalarKernel k, Id arg);
  Id max_exact(MaxFunction p, Id arg);
  Id apply(ScalarMap map, Id arg);

  void set_root(Id id) { root_ = id; }
  Id root() const { return root_; }
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const std::vector<SmoothScalarKernel>& kernels() const { return kernels_; }
  const std::vector<MaxFunction>& max_functions() const { return max_functions_; }

  double eval(std::span<const double> x, double a) const;
  void gradient(std::span<const double> x, double a, std::span<double> out) const;

  nlohmann::json to_json() const;
  static ExprGraph from_json(const nlohmann::json& j);

 private:
  Id push(ExprNode n);
  std::vector<ExprNode> nodes_;
  std::vector<SmoothScalarKernel> kernels_;
  std::vector<MaxFunction> max_functions_;
  std::vector<ScalarMap> maps_;
  Id root_ = -1;
};

using TargetFn = std::function<double(std::span<const double>)>;

// A parameterized objective (x, a) -> f_a(x) on R^d x (0, a_max], either
// graph-backed (serializable, AD gradient) or defined by closed-form
// callbacks. `target` is the exact limit function F when known.
struct SmoothingFamily {
  std::string name;
  int dimension = 1;
  double a_max = 1.0;
  std::shared_ptr<const ExprGraph> graph;
  std::function<double(std::span<const double>, double)> custom_value;
  std::function<Vec(std::span<const double>, double)> custom_gradient;
  TargetFn target;
  bool oscillatory = false;  // the certificate of criticality is vacuous

  double value(std::span<const double> x, double a) const;
  Vec gradient(std::span<const double> x, double a) const;
  void check_args(std::span<const double> x, double a) const;

  nlohmann::json to_json() const;
  static SmoothingFamily from_json(const nlohmann::json& j);
};

enum class BuiltinFamily {
  OscillatingSin, Hat, Chen, SignSqrt, AbsHuber, MaxFiniteDemo, NonLipschitzQ
};

SmoothingFamily builtin_family(BuiltinFamily which);
// Accepts the CLI spellings ("sin", "hat", "chen", "signsqrt", "absl1", ...).
SmoothingFamily builtin_family(const std::string& name);
std::vector<std::string> builtin_family_names();

// The three-piece envelope max(0, t, 2t - 1) used by the max-function demos.
MaxFunction demo_max_function();

}  // namespace limitfield
