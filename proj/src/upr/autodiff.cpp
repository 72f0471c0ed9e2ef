#include "upr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "upr/error.hpp"

namespace upr::ad {
namespace {

constexpr std::uint32_t kNone = Var::kConstant;

Tape* common_tape(const Var& a, const Var& b) {
  if (a.tape() && b.tape() && a.tape() != b.tape()) {
    fail(Errc::contract, "operands recorded on different tapes");
  }
  return a.tape() ? a.tape() : b.tape();
}

void check_finite(double v, const char* op) {
  if (!std::isfinite(v)) {
    fail(Errc::numeric, std::string("non-finite intermediate in '") + op + "'");
  }
}

}  // namespace

Var Tape::variable(double v) {
  check_finite(v, "variable");
  nodes_.push_back({kNone, kNone, 0.0, 0.0});
  return Var(v, static_cast<std::uint32_t>(nodes_.size() - 1), this);
}

Var Tape::unary(double value, const Var& a, double da, const char* op) {
  check_finite(value, op);
  if (a.is_constant()) return Var(value);
  check_finite(da, op);
  nodes_.push_back({a.index(), kNone, da, 0.0});
  return Var(value, static_cast<std::uint32_t>(nodes_.size() - 1), this);
}

Var Tape::binary(double value, const Var& a, double da, const Var& b, double db,
                 const char* op) {
  check_finite(value, op);
  if (a.is_constant() && b.is_constant()) return Var(value);
  Node node{kNone, kNone, 0.0, 0.0};
  if (!a.is_constant()) {
    check_finite(da, op);
    node.a = a.index();
    node.da = da;
  }
  if (!b.is_constant()) {
    check_finite(db, op);
    if (node.a == kNone) {
      node.a = b.index();
      node.da = db;
    } else {
      node.b = b.index();
      node.db = db;
    }
  }
  nodes_.push_back(node);
  return Var(value, static_cast<std::uint32_t>(nodes_.size() - 1), this);
}

std::vector<double> Tape::adjoints(const Var& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (output.is_constant()) return adj;
  if (output.tape() != this) fail(Errc::contract, "output recorded on another tape");
  adj[output.index()] = 1.0;
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    const double g = adj[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.a != kNone) adj[n.a] += g * n.da;
    if (n.b != kNone) adj[n.b] += g * n.db;
  }
  return adj;
}

void Tape::note_branch(double margin) {
  branch_margin_ = std::min(branch_margin_, std::abs(margin));
}

void Tape::clear() {
  nodes_.clear();
  branch_margin_ = std::numeric_limits<double>::infinity();
}

Var operator+(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  if (!t) return Var(a.value() + b.value());
  return t->binary(a.value() + b.value(), a, 1.0, b, 1.0, "add");
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  if (!t) return Var(a.value() - b.value());
  return t->binary(a.value() - b.value(), a, 1.0, b, -1.0, "sub");
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  if (!t) return Var(a.value() * b.value());
  return t->binary(a.value() * b.value(), a, b.value(), b, a.value(), "mul");
}

Var operator/(const Var& a, const Var& b) {
  if (b.value() == 0.0) fail(Errc::numeric_domain, "division by zero in 'div'");
  Tape* t = common_tape(a, b);
  const double q = a.value() / b.value();
  if (!t) return Var(q);
  return t->binary(q, a, 1.0 / b.value(), b, -q / b.value(), "div");
}

Var operator-(const Var& a) {
  if (a.is_constant()) return Var(-a.value());
  return a.tape()->unary(-a.value(), a, -1.0, "neg");
}

Var exp(const Var& x) {
  const double e = std::exp(x.value());
  if (x.is_constant()) {
    check_finite(e, "exp");
    return Var(e);
  }
  return x.tape()->unary(e, x, e, "exp");
}

Var sqrt(const Var& x) {
  if (x.value() < 0.0) fail(Errc::numeric_domain, "negative argument in 'sqrt'");
  const double r = std::sqrt(x.value());
  if (x.is_constant()) return Var(r);
  return x.tape()->unary(r, x, 0.5 / r, "sqrt");
}

Var pow2(const Var& x) {
  if (x.is_constant()) return Var(x.value() * x.value());
  return x.tape()->unary(x.value() * x.value(), x, 2.0 * x.value(), "pow2");
}

Var min_select(const Var& a, const Var& b) {
  const Var& chosen = b.value() < a.value() ? b : a;
  if (chosen.is_constant()) return Var(chosen.value());
  return chosen.tape()->unary(chosen.value(), chosen, 1.0, "min_select");
}

Var max_select(const Var& a, const Var& b) {
  const Var& chosen = b.value() > a.value() ? b : a;
  if (chosen.is_constant()) return Var(chosen.value());
  return chosen.tape()->unary(chosen.value(), chosen, 1.0, "max_select");
}

Var stop_gradient(const Var& x) { return Var(x.value()); }

void note_branch(const Var& anchor, double margin) {
  if (anchor.tape()) anchor.tape()->note_branch(margin);
}

GradientResult gradient(const ScalarFn& f, std::span<const double> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (double p : params) vars.push_back(tape.variable(p));
  const Var out = f(tape, vars);
  check_finite(out.value(), "output");

  GradientResult result;
  result.value = out.value();
  result.branch_margin = tape.branch_margin();
  result.gradient.assign(params.size(), 0.0);
  if (out.is_constant()) return result;
  const std::vector<double> adj = tape.adjoints(out);
  for (std::size_t i = 0; i < vars.size(); ++i) result.gradient[i] = adj[vars[i].index()];
  return result;
}

GradCheckReport compare_central_differences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, std::span<const double> analytic, double h,
    std::span<const std::size_t> coords) {
  if (!(h > 0.0)) fail(Errc::invalid_argument, "finite-difference step must be positive");
  if (analytic.size() != params.size()) {
    fail(Errc::invalid_argument, "analytic gradient size does not match parameters");
  }
  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(params.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    coords = all;
  }

  GradCheckReport report;
  std::vector<double> x(params.begin(), params.end());
  for (std::size_t i : coords) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err =
        std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(analytic[i]));
    if (err > report.max_rel_error || !std::isfinite(err)) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
  }
  return report;
}

GradCheckReport grad_check(const ScalarFn& f, std::span<const double> params,
                           double h) {
  const GradientResult g = gradient(f, params);
  auto eval = [&f](std::span<const double> x) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(x.size());
    for (double v : x) vars.push_back(tape.variable(v));
    return f(tape, vars).value();
  };
  GradCheckReport report = compare_central_differences(eval, params, g.gradient, h);
  report.branch_margin = g.branch_margin;
  // A unit parameter step moves any sample by at most one unit, and SDFs are
  // 1-Lipschitz, so a branch closer than a few h can flip inside the stencil.
  report.differentiable = g.branch_margin > 10.0 * h;
  return report;
}

}  // namespace upr::ad
