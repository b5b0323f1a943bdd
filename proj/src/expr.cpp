#include "limitfield/expr.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace limitfield {

using json = nlohmann::json;

ExprGraph::Id ExprGraph::push(ExprNode n) {
  nodes_.push_back(std::move(n));
  root_ = static_cast<Id>(nodes_.size()) - 1;
  return root_;
}

ExprGraph::Id ExprGraph::constant(double c) { return push({.op = Op::Const, .constant = c}); }
ExprGraph::Id ExprGraph::var(int index) {
  if (index < 0) throw Error("negative variable index");
  return push({.op = Op::Var, .var_index = index});
}
ExprGraph::Id ExprGraph::param() { return push({.op = Op::Param}); }
ExprGraph::Id ExprGraph::add(Id a, Id b) { return push({.op = Op::Add, .arg0 = a, .arg1 = b}); }
ExprGraph::Id ExprGraph::sub(Id a, Id b) { return push({.op = Op::Sub, .arg0 = a, .arg1 = b}); }
ExprGraph::Id ExprGraph::mul(Id a, Id b) { return push({.op = Op::Mul, .arg0 = a, .arg1 = b}); }
ExprGraph::Id ExprGraph::div(Id a, Id b) { return push({.op = Op::Div, .arg0 = a, .arg1 = b}); }
ExprGraph::Id ExprGraph::neg(Id a) { return push({.op = Op::Neg, .arg0 = a}); }
ExprGraph::Id ExprGraph::dot(std::vector<double> weights) {
  return push({.op = Op::Dot, .weights = std::move(weights)});
}
ExprGraph::Id ExprGraph::sin(Id a) { return push({.op = Op::Sin, .arg0 = a}); }
ExprGraph::Id ExprGraph::cos(Id a) { return push({.op = Op::Cos, .arg0 = a}); }
ExprGraph::Id ExprGraph::exp(Id a) { return push({.op = Op::Exp, .arg0 = a}); }
ExprGraph::Id ExprGraph::log(Id a) { return push({.op = Op::Log, .arg0 = a}); }
ExprGraph::Id ExprGraph::sqrt(Id a) { return push({.op = Op::Sqrt, .arg0 = a}); }
ExprGraph::Id ExprGraph::pow_rational(Id a, long num, long den) {
  if (den == 0) throw Error("zero denominator in rational exponent");
  return push({.op = Op::PowRational, .arg0 = a, .exponent = {num, den}});
}
ExprGraph::Id ExprGraph::abs_pow(Id a, long num, long den) {
  if (den == 0) throw Error("zero denominator in rational exponent");
  return push({.op = Op::AbsPow, .arg0 = a, .exponent = {num, den}});
}
ExprGraph::Id ExprGraph::kernel(SmoothScalarKernel k, Id arg) {
  kernels_.push_back(std::move(k));
  return push({.op = Op::Kernel, .arg0 = arg,
               .table_index = static_cast<int>(kernels_.size()) - 1});
}
ExprGraph::Id ExprGraph::max_exact(MaxFunction p, Id arg) {
  max_functions_.push_back(std::move(p));
  return push({.op = Op::MaxExact, .arg0 = arg,
               .table_index = static_cast<int>(max_functions_.size()) - 1});
}
ExprGraph::Id ExprGraph::apply(ScalarMap map, Id arg) {
  maps_.push_back(std::move(map));
  return push({.op = Op::Apply, .arg0 = arg,
               .table_index = static_cast<int>(maps_.size()) - 1});
}

namespace {

struct NodeEval {
  double value = 0.0;
  // Local derivatives with respect to arg0 / arg1.
  double d0 = 0.0, d1 = 0.0;
};

}  // namespace

// Forward sweep shared by eval and gradient. `with_derivs` also records the
// local partials used by the reverse sweep (and raises KinkError where the
// node is not differentiable).
static void forward(const std::vector<ExprNode>& nodes,
                    const std::vector<SmoothScalarKernel>& kernels,
                    const std::vector<MaxFunction>& maxes,
                    const std::vector<ScalarMap>& maps,
                    std::span<const double> x, double a, bool with_derivs,
                    std::vector<NodeEval>& w) {
  w.assign(nodes.size(), {});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const ExprNode& n = nodes[i];
    double v0 = n.arg0 >= 0 ? w[n.arg0].value : 0.0;
    double v1 = n.arg1 >= 0 ? w[n.arg1].value : 0.0;
    NodeEval& e = w[i];
    switch (n.op) {
      case Op::Const: e.value = n.constant; break;
      case Op::Var:
        if (n.var_index >= static_cast<int>(x.size()))
          throw EvalError("variable index out of range");
        e.value = x[n.var_index];
        break;
      case Op::Param: e.value = a; break;
      case Op::Add: e.value = v0 + v1; e.d0 = 1.0; e.d1 = 1.0; break;
      case Op::Sub: e.value = v0 - v1; e.d0 = 1.0; e.d1 = -1.0; break;
      case Op::Mul: e.value = v0 * v1; e.d0 = v1; e.d1 = v0; break;
      case Op::Div:
        if (v1 == 0.0) throw EvalError("division by zero at node div");
        e.value = v0 / v1;
        e.d0 = 1.0 / v1;
        e.d1 = -v0 / (v1 * v1);
        break;
      case Op::Neg: e.value = -v0; e.d0 = -1.0; break;
      case Op::Dot: {
        double s = 0.0;
        for (std::size_t k = 0; k < n.weights.size(); ++k) {
          if (k >= x.size()) throw EvalError("dot weights exceed dimension");
          s += n.weights[k] * x[k];
        }
        e.value = s;
        break;
      }
      case Op::Sin: e.value = std::sin(v0); e.d0 = std::cos(v0); break;
      case Op::Cos: e.value = std::cos(v0); e.d0 = -std::sin(v0); break;
      case Op::Exp: e.value = std::exp(v0); e.d0 = e.value; break;
      case Op::Log:
        if (v0 <= 0.0) throw EvalError("log of non-positive value at node log");
        e.value = std::log(v0);
        e.d0 = 1.0 / v0;
        break;
      case Op::Sqrt:
        if (v0 < 0.0) throw EvalError("sqrt of negative value at node sqrt");
        e.value = std::sqrt(v0);
        if (with_derivs) {
          if (v0 == 0.0) throw KinkError("kink evaluation");
          e.d0 = 0.5 / e.value;
        }
        break;
      case Op::PowRational: {
        double q = n.exponent.value();
        if (v0 < 0.0) throw EvalError("negative base at node pow");
        if (v0 == 0.0) {
          if (q <= 0.0) throw EvalError("zero base with non-positive exponent");
          e.value = 0.0;
          if (with_derivs) {
            if (q < 1.0) throw KinkError("kink evaluation");
            e.d0 = q == 1.0 ? 1.0 : 0.0;
          }
        } else {
          e.value = std::pow(v0, q);
          e.d0 = q * std::pow(v0, q - 1.0);
        }
        break;
      }
      case Op::AbsPow: {
        double q = n.exponent.value();
        if (q <= 0.0) throw Error("abs_pow exponent must be positive");
        double av = std::abs(v0);
        e.value = std::pow(av, q);
        if (with_derivs) {
          if (v0 == 0.0) {
            if (q <= 1.0) throw KinkError("kink evaluation");
            e.d0 = 0.0;
          } else {
            e.d0 = q * std::pow(av, q - 1.0) * (v0 > 0.0 ? 1.0 : -1.0);
          }
        }
        break;
      }
      case Op::Kernel: {
        ValueDeriv vd = kernels[n.table_index].eval(v0, a);
        e.value = vd.value;
        e.d0 = vd.deriv;
        break;
      }
      case Op::MaxExact: {
        const MaxFunction& p = maxes[n.table_index];
        e.value = p.value(v0);
        if (with_derivs) e.d0 = p.derivative(v0);  // throws KinkError on a breakpoint
        break;
      }
      case Op::Apply: {
        const ScalarMap& m = maps[n.table_index];
        e.value = m.value(v0);
        if (with_derivs) e.d0 = m.deriv(v0);
        break;
      }
    }
    if (!std::isfinite(e.value))
      throw EvalError("non-finite value during evaluation");
  }
}

double ExprGraph::eval(std::span<const double> x, double a) const {
  if (root_ < 0) throw Error("expression graph has no root");
  std::vector<NodeEval> w;
  forward(nodes_, kernels_, max_functions_, maps_, x, a, /*with_derivs=*/false, w);
  return w[root_].value;
}

void ExprGraph::gradient(std::span<const double> x, double a, std::span<double> out) const {
  if (root_ < 0) throw Error("expression graph has no root");
  std::vector<NodeEval> w;
  forward(nodes_, kernels_, max_functions_, maps_, x, a, /*with_derivs=*/true, w);
  std::vector<double> adj(nodes_.size(), 0.0);
  for (double& g : out) g = 0.0;
  adj[root_] = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    double ai = adj[i];
    if (ai == 0.0) continue;
    const ExprNode& n = nodes_[i];
    if (n.op == Op::Var) {
      out[n.var_index] += ai;
    } else if (n.op == Op::Dot) {
      for (std::size_t k = 0; k < n.weights.size(); ++k) out[k] += ai * n.weights[k];
    } else {
      if (n.arg0 >= 0) adj[n.arg0] += ai * w[i].d0;
      if (n.arg1 >= 0) adj[n.arg1] += ai * w[i].d1;
    }
  }
}

void SmoothingFamily::check_args(std::span<const double> x, double a) const {
  if (static_cast<int>(x.size()) != dimension)
    throw Error("point dimension mismatch");
  if (!(a > 0.0)) throw Error("parameter must be positive");
  if (a > a_max) throw Error("parameter exceeds a_max");
}

double SmoothingFamily::value(std::span<const double> x, double a) const {
  check_args(x, a);
  if (graph) return graph->eval(x, a);
  if (custom_value) return custom_value(x, a);
  throw Error("family has no evaluator");
}

Vec SmoothingFamily::gradient(std::span<const double> x, double a) const {
  check_args(x, a);
  if (graph) {
    Vec g(dimension, 0.0);
    graph->gradient(x, a, g);
    return g;
  }
  if (custom_gradient) return custom_gradient(x, a);
  throw Error("family has no gradient evaluator");
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

json max_function_to_json(const MaxFunction& p) {
  json arr = json::array();
  for (const auto& piece : p.pieces()) arr.push_back({piece.slope, piece.intercept});
  return arr;
}

MaxFunction max_function_from_json(const json& j) {
  std::vector<AffinePiece> pieces;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw Error("family parse error: max-function piece must be [slope, intercept]");
    pieces.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return MaxFunction::build_envelope(std::move(pieces));
}

const char* kernel_kind_name(KernelKind k) {
  return k == KernelKind::Uniform ? "uniform" : "triangular";
}

}  // namespace

json ExprGraph::to_json() const {
  // Emit as a nested tree rooted at root_; shared sub-DAGs are duplicated.
  std::function<json(int)> emit = [&](int id) -> json {
    const ExprNode& n = nodes_[id];
    switch (n.op) {
      case Op::Const: return {{"op", "const"}, {"value", n.constant}};
      case Op::Var: return {{"op", "var"}, {"index", n.var_index}};
      case Op::Param: return {{"op", "param"}};
      case Op::Add: return {{"op", "add"}, {"args", {emit(n.arg0), emit(n.arg1)}}};
      case Op::Sub: return {{"op", "sub"}, {"args", {emit(n.arg0), emit(n.arg1)}}};
      case Op::Mul: return {{"op", "mul"}, {"args", {emit(n.arg0), emit(n.arg1)}}};
      case Op::Div: return {{"op", "div"}, {"args", {emit(n.arg0), emit(n.arg1)}}};
      case Op::Neg: return {{"op", "neg"}, {"arg", emit(n.arg0)}};
      case Op::Dot: return {{"op", "dot"}, {"weights", n.weights}};
      case Op::Sin: return {{"op", "sin"}, {"arg", emit(n.arg0)}};
      case Op::Cos: return {{"op", "cos"}, {"arg", emit(n.arg0)}};
      case Op::Exp: return {{"op", "exp"}, {"arg", emit(n.arg0)}};
      case Op::Log: return {{"op", "log"}, {"arg", emit(n.arg0)}};
      case Op::Sqrt: return {{"op", "sqrt"}, {"arg", emit(n.arg0)}};
      case Op::PowRational:
        return {{"op", "pow"}, {"num", n.exponent.num}, {"den", n.exponent.den},
                {"arg", emit(n.arg0)}};
      case Op::AbsPow:
        return {{"op", "abs_pow"}, {"num", n.exponent.num}, {"den", n.exponent.den},
                {"arg", emit(n.arg0)}};
      case Op::Kernel: {
        const SmoothScalarKernel& k = kernels_[n.table_index];
        json jk = {{"op", "kernel"}, {"kind", to_string(k.kind())}, {"arg", emit(n.arg0)}};
        if (k.kind() == ScalarKernelKind::ConvMax) {
          jk["pieces"] = max_function_to_json(*k.max_function());
          jk["window"] = kernel_kind_name(k.window()->kind);
        }
        return jk;
      }
      case Op::MaxExact:
        return {{"op", "max"},
                {"pieces", max_function_to_json(max_functions_[n.table_index])},
                {"arg", emit(n.arg0)}};
      case Op::Apply:
        throw Error("apply nodes are not serializable");
    }
    throw Error("unknown node op");
  };
  return emit(root_);
}

ExprGraph ExprGraph::from_json(const json& j) {
  ExprGraph g;
  std::function<Id(const json&)> build = [&](const json& node) -> Id {
    if (!node.is_object() || !node.contains("op"))
      throw Error("family parse error: node must be an object with an \"op\" field");
    std::string op = node.at("op").get<std::string>();
    auto arg = [&](const char* key = "arg") { return build(node.at(key)); };
    auto args2 = [&]() {
      const json& a = node.at("args");
      if (!a.is_array() || a.size() != 2)
        throw Error("family parse error: \"args\" must hold two nodes");
      Id i0 = build(a[0]);
      Id i1 = build(a[1]);
      return std::pair<Id, Id>{i0, i1};
    };
    if (op == "const") return g.constant(node.at("value").get<double>());
    if (op == "var") return g.var(node.at("index").get<int>());
    if (op == "param") return g.param();
    if (op == "add") { auto [a, b] = args2(); return g.add(a, b); }
    if (op == "sub") { auto [a, b] = args2(); return g.sub(a, b); }
    if (op == "mul") { auto [a, b] = args2(); return g.mul(a, b); }
    if (op == "div") { auto [a, b] = args2(); return g.div(a, b); }
    if (op == "neg") return g.neg(arg());
    if (op == "dot") return g.dot(node.at("weights").get<std::vector<double>>());
    if (op == "sin") return g.sin(arg());
    if (op == "cos") return g.cos(arg());
    if (op == "exp") return g.exp(arg());
    if (op == "log") return g.log(arg());
    if (op == "sqrt") return g.sqrt(arg());
    if (op == "pow")
      return g.pow_rational(arg(), node.at("num").get<long>(), node.at("den").get<long>());
    if (op == "abs_pow")
      return g.abs_pow(arg(), node.at("num").get<long>(), node.at("den").get<long>());
    if (op == "max") {
      MaxFunction p = max_function_from_json(node.at("pieces"));
      return g.max_exact(std::move(p), arg());
    }
    if (op == "kernel") {
      std::string kind = node.at("kind").get<std::string>();
      if (kind == "conv_max") {
        MaxFunction p = max_function_from_json(node.at("pieces"));
        std::string win = node.value("window", "uniform");
        Kernel k = Kernel::make(win == "triangular" ? KernelKind::Triangular
                                                    : KernelKind::Uniform);
        return g.kernel(SmoothScalarKernel(std::move(p), k), arg());
      }
      ScalarKernelKind sk;
      if (kind == "huber_plus") sk = ScalarKernelKind::HuberPlus;
      else if (kind == "sqrt_plus") sk = ScalarKernelKind::SqrtPlus;
      else if (kind == "soft_plus") sk = ScalarKernelKind::SoftPlus;
      else if (kind == "huber_abs") sk = ScalarKernelKind::HuberAbs;
      else if (kind == "sqrt_abs") sk = ScalarKernelKind::SqrtAbs;
      else throw Error("family parse error: unknown kernel kind \"" + kind + "\"");
      return g.kernel(SmoothScalarKernel(sk), arg());
    }
    throw Error("family parse error: unknown op \"" + op + "\"");
  };
  g.set_root(build(j));
  return g;
}

json SmoothingFamily::to_json() const {
  if (!graph) throw Error("family \"" + name + "\" is not graph-backed; serialize by name");
  return {{"dimension", dimension}, {"a_max", a_max}, {"graph", graph->to_json()}};
}

SmoothingFamily SmoothingFamily::from_json(const json& j) {
  SmoothingFamily fam;
  try {
    fam.dimension = j.at("dimension").get<int>();
    fam.a_max = j.at("a_max").get<double>();
    fam.graph = std::make_shared<ExprGraph>(ExprGraph::from_json(j.at("graph")));
  } catch (const json::exception& e) {
    throw Error(std::string("family parse error: ") + e.what());
  }
  if (fam.dimension < 1) throw Error("family parse error: dimension must be >= 1");
  if (!(fam.a_max > 0.0)) throw Error("family parse error: a_max must be positive");
  fam.name = j.value("name", "custom");
  return fam;
}

// ---------------------------------------------------------------------------
// Builtin families
// ---------------------------------------------------------------------------

MaxFunction demo_max_function() {
  return MaxFunction::build_envelope({{0.0, 0.0}, {1.0, 0.0}, {2.0, -1.0}});
}

SmoothingFamily builtin_family(BuiltinFamily which) {
  SmoothingFamily fam;
  fam.dimension = 1;
  fam.a_max = 1.0;
  switch (which) {
    case BuiltinFamily::OscillatingSin: {
      fam.name = "sin";
      auto g = std::make_shared<ExprGraph>();
      auto x = g->var(0);
      auto a = g->param();
      g->set_root(g->mul(a, g->sin(g->div(x, a))));
      fam.graph = g;
      fam.target = [](std::span<const double>) { return 0.0; };
      fam.oscillatory = true;
      break;
    }
    case BuiltinFamily::Hat: {
      fam.name = "hat";
      fam.custom_value = [](std::span<const double> x, double a) {
        double ax = std::abs(x[0]);
        return ax < a ? a - ax : 0.0;
      };
      fam.custom_gradient = [](std::span<const double> x, double a) -> Vec {
        double t = x[0];
        if (t == 0.0 || std::abs(t) == a) throw KinkError("kink evaluation");
        if (std::abs(t) > a) return {0.0};
        return {t > 0.0 ? -1.0 : 1.0};
      };
      fam.target = [](std::span<const double>) { return 0.0; };
      break;
    }
    case BuiltinFamily::Chen: {
      // f_a(t) = sqrt(t^2 + 4a^2) - sqrt(t^2 + a^2); the difference of the two
      // square-root smoothings of 2*max(0,t) and max(0,2t).
      fam.name = "chen";
      auto g = std::make_shared<ExprGraph>();
      auto t = g->var(0);
      auto a = g->param();
      auto t2 = g->mul(t, t);
      auto a2 = g->mul(a, a);
      auto four_a2 = g->mul(g->constant(4.0), a2);
      g->set_root(g->sub(g->sqrt(g->add(t2, four_a2)), g->sqrt(g->add(t2, a2))));
      fam.graph = g;
      fam.target = [](std::span<const double>) { return 0.0; };
      break;
    }
    case BuiltinFamily::SignSqrt: {
      fam.name = "signsqrt";
      fam.custom_value = [](std::span<const double> x, double a) {
        double t = x[0];
        return t > 0.0 ? std::sqrt(t + a) : 2.0 * std::sqrt(a) - std::sqrt(a - t);
      };
      fam.custom_gradient = [](std::span<const double> x, double a) -> Vec {
        double t = x[0];
        return {t > 0.0 ? 0.5 / std::sqrt(t + a) : 0.5 / std::sqrt(a - t)};
      };
      fam.target = [](std::span<const double> x) {
        double t = x[0];
        return (t >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::abs(t));
      };
      break;
    }
    case BuiltinFamily::AbsHuber: {
      fam.name = "absl1";
      auto g = std::make_shared<ExprGraph>();
      auto x = g->var(0);
      g->set_root(g->kernel(SmoothScalarKernel(ScalarKernelKind::HuberAbs), x));
      fam.graph = g;
      fam.target = [](std::span<const double> x) { return std::abs(x[0]); };
      break;
    }
    case BuiltinFamily::MaxFiniteDemo: {
      fam.name = "maxdemo";
      MaxFunction p = demo_max_function();
      auto g = std::make_shared<ExprGraph>();
      auto x = g->var(0);
      g->set_root(g->kernel(
          SmoothScalarKernel(demo_max_function(), Kernel::make(KernelKind::Uniform)), x));
      fam.graph = g;
      fam.target = [p = std::move(p)](std::span<const double> x) { return p.value(x[0]); };
      break;
    }
    case BuiltinFamily::NonLipschitzQ: {
      // |x|^2 + |x_1|^(1/2), the absolute value smoothed before taking the
      // fractional power.
      fam.name = "nlq";
      fam.dimension = 2;
      auto g = std::make_shared<ExprGraph>();
      auto x1 = g->var(0);
      auto x2 = g->var(1);
      auto quad = g->add(g->mul(x1, x1), g->mul(x2, x2));
      auto habs = g->kernel(SmoothScalarKernel(ScalarKernelKind::HuberAbs), x1);
      g->set_root(g->add(quad, g->pow_rational(habs, 1, 2)));
      fam.graph = g;
      fam.target = [](std::span<const double> x) {
        return x[0] * x[0] + x[1] * x[1] + std::sqrt(std::abs(x[0]));
      };
      break;
    }
  }
  return fam;
}

SmoothingFamily builtin_family(const std::string& name) {
  if (name == "sin" || name == "oscillating_sin") return builtin_family(BuiltinFamily::OscillatingSin);
  if (name == "hat") return builtin_family(BuiltinFamily::Hat);
  if (name == "chen") return builtin_family(BuiltinFamily::Chen);
  if (name == "signsqrt") return builtin_family(BuiltinFamily::SignSqrt);
  if (name == "absl1" || name == "abs_huber") return builtin_family(BuiltinFamily::AbsHuber);
  if (name == "maxdemo") return builtin_family(BuiltinFamily::MaxFiniteDemo);
  if (name == "nlq" || name == "nonlipschitz_q") return builtin_family(BuiltinFamily::NonLipschitzQ);
  throw Error("unknown builtin family \"" + name + "\"");
}

std::vector<std::string> builtin_family_names() {
  return {"sin", "hat", "chen", "signsqrt", "absl1", "maxdemo", "nlq"};
}

}  // namespace limitfield
