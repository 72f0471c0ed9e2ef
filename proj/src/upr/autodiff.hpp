#pragma once

// Scalar reverse-mode differentiation over an append-only tape.
//
// A Var is either a constant (no tape) or a handle to a node on one Tape.
// Every node stores at most two parents with their local partials, so the
// backward sweep is a single reverse pass over the node array.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace upr::ad {

class Tape;

class Var {
 public:
  static constexpr std::uint32_t kConstant = std::numeric_limits<std::uint32_t>::max();

  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT(google-explicit-constructor): constants mix freely

  double value() const { return value_; }
  bool is_constant() const { return tape_ == nullptr; }
  std::uint32_t index() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(double v, std::uint32_t id, Tape* tape) : value_(v), id_(id), tape_(tape) {}

  double value_ = 0.0;
  std::uint32_t id_ = kConstant;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  Var variable(double v);

  // Records a node. Constant operands are dropped from the parent list.
  Var unary(double value, const Var& a, double da, const char* op);
  Var binary(double value, const Var& a, double da, const Var& b, double db,
             const char* op);

  // Adjoint of every node with respect to `output`.
  std::vector<double> adjoints(const Var& output) const;

  // Smallest distance to a branch switch seen while recording. Cost code
  // reports SDF sign tests, argmin gaps and face selections here so that a
  // finite-difference check can tell when it straddles a kink.
  void note_branch(double margin);
  double branch_margin() const { return branch_margin_; }

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    std::uint32_t a;
    std::uint32_t b;
    double da;
    double db;
  };
  std::vector<Node> nodes_;
  double branch_margin_ = std::numeric_limits<double>::infinity();
};

inline double value(const Var& v) { return v.value(); }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var exp(const Var& x);
Var sqrt(const Var& x);
Var pow2(const Var& x);
Var min_select(const Var& a, const Var& b);
Var max_select(const Var& a, const Var& b);
Var stop_gradient(const Var& x);

// Records the margin on whichever tape `anchor` lives on; no-op for constants.
void note_branch(const Var& anchor, double margin);

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradientResult {
  double value = 0.0;
  std::vector<double> gradient;
  double branch_margin = std::numeric_limits<double>::infinity();
};

// One forward record plus one backward sweep.
GradientResult gradient(const ScalarFn& f, std::span<const double> params);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  // False when a branch switch lies within the finite-difference stencil.
  bool differentiable = true;
  double branch_margin = std::numeric_limits<double>::infinity();
};

// Central differences against `analytic` on the listed coordinates (all when
// empty). Relative error uses max(1, |analytic|) as denominator.
GradCheckReport compare_central_differences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, std::span<const double> analytic, double h,
    std::span<const std::size_t> coords = {});

GradCheckReport grad_check(const ScalarFn& f, std::span<const double> params,
                           double h);

}  // namespace upr::ad

namespace upr {
inline double value(double x) { return x; }
inline void note_branch(double, double) {}
using ad::note_branch;
using ad::value;
}  // namespace upr
