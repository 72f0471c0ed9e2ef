#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "upr/geom.hpp"

namespace upr {

inline constexpr double kMinWeight = 1e-3;

// NURBS path with the full control sequence [start, anchors..., goal] and
// weights [1, weights..., 1]. Only the anchors and their weights are free.
struct SplinePath {
  int degree = 2;
  Point start;
  Point goal;
  std::vector<Point> anchors;
  std::vector<double> weights;

  int dim() const { return start.dim; }
  std::size_t anchor_count() const { return anchors.size(); }
  double domain_max() const;

  std::vector<Point> controls() const;
  // Endpoint weights fixed at 1, anchor weights clamped to [kMinWeight, 1].
  std::vector<double> effective_weights() const;

  // Throws invalid_argument when any invariant is broken.
  void validate() const;
};

// Upper end of the parameter domain [0, D]. D = n - p when n > p; for n <= p
// (single-anchor parameterizations) D is the span count n + 2 - p.
double parameter_domain(std::size_t anchors, int degree);

std::vector<double> open_uniform_knots(std::size_t count, int degree, double domain_max);

// All `count` B-spline basis values at u by the Cox-de Boor recurrence.
std::vector<double> basis_functions(std::span<const double> knots, int degree,
                                    std::size_t count, double u);

Point nurbs_eval(const SplinePath& path, double u);

// {0, s, 2s, ...} within [0, domain_max], with domain_max always last.
std::vector<double> sample_parameters(double domain_max, double step);

struct SampleSet {
  double step = 0.0;
  std::vector<double> parameters;
  std::vector<Point> points;
};

SampleSet sample_path(const SplinePath& path, double step);

SplinePath straight_line_spline(const Point& start, const Point& goal,
                                std::size_t anchors, int degree);

// Basis values at a fixed sample set, reused across many evaluations with
// different control points (optimizer iterations, grid cells, batches).
class SampleBasis {
 public:
  SampleBasis(std::size_t anchors, int degree, double step);

  std::size_t anchor_count() const { return anchors_; }
  int degree() const { return degree_; }
  double step() const { return step_; }
  const std::vector<double>& parameters() const { return parameters_; }
  std::size_t size() const { return parameters_.size(); }

  // `controls` and `weights` cover the full sequence (anchors + 2).
  template <class T>
  std::vector<BasicPoint<T>> evaluate(std::span<const BasicPoint<T>> controls,
                                      std::span<const T> weights) const {
    std::vector<BasicPoint<T>> out(parameters_.size());
    const int dim = controls.front().dim;
    const std::size_t width = static_cast<std::size_t>(degree_) + 1;
    for (std::size_t s = 0; s < parameters_.size(); ++s) {
      const std::size_t first = first_[s];
      const double* basis = &values_[s * width];
      T denom = 0.0;
      BasicPoint<T> num;
      num.dim = dim;
      for (int d = 0; d < dim; ++d) num[d] = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        if (basis[j] == 0.0) continue;
        const T bw = weights[first + j] * basis[j];
        denom = denom + bw;
        for (int d = 0; d < dim; ++d) num[d] = num[d] + bw * controls[first + j][d];
      }
      out[s].dim = dim;
      for (int d = 0; d < dim; ++d) out[s][d] = num[d] / denom;
    }
    return out;
  }

  SampleSet sample(const SplinePath& path) const;

 private:
  std::size_t anchors_;
  int degree_;
  double step_;
  std::vector<double> parameters_;
  std::vector<std::size_t> first_;
  std::vector<double> values_;
};

}  // namespace upr
