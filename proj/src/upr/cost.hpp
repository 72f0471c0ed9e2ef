#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "upr/geom.hpp"
#include "upr/spline.hpp"

namespace upr {

struct CostParams {
  double step = 0.05;           // s, spacing in the parameter domain
  double safe_distance = 0.0;   // delta
};

struct CostBreakdown {
  double length = 0.0;
  double exact_collision = 0.0;
  double smooth_collision = 0.0;
  double total_smooth = 0.0;
  bool collides = false;
};

struct ChompParams {
  double lambda = 1.0;
  double epsilon = 1.0;
};

void validate(const CostParams& params);
void validate(const ChompParams& params);

// Per-sample collision bookkeeping shared by the exact and smooth costs.
struct SampleLabels {
  std::vector<std::size_t> selected;      // tau(x)
  std::vector<double> min_sdf;
  std::vector<double> gap;                // argmin gap, for branch margins
  std::vector<std::size_t> colliding_per_obstacle;

  bool colliding(std::size_t i) const { return min_sdf[i] < 0.0; }
};

SampleLabels label_samples(const Scene& scene, std::span<const Point> points);

double path_length(std::span<const Point> points);
double path_length(const SampleSet& samples);

// Sum over obstacles of R(o) times the indicator "some sample lies inside o".
double exact_collision_cost(const Scene& scene, const SampleSet& samples);
// Sum of point costs over samples. Equal to exact_collision_cost unless an
// obstacle is only ever entered where another obstacle is deeper.
double pointwise_collision_cost(const Scene& scene, const SampleSet& samples);

std::size_t delta_count(const Scene& scene, const SampleSet& samples, std::size_t index);
double point_cost(const Scene& scene, const SampleSet& samples, std::size_t index);

// H(x) = 2 / (1 + e^(x - delta)), saturated beyond |x - delta| > 50.
template <class T>
T step_h(const T& x, double delta) {
  using std::exp;
  const T z = x - delta;
  if (value(z) > 50.0) return T(0.0);
  if (value(z) < -50.0) return T(2.0);
  return T(2.0) / (T(1.0) + exp(z));
}

double smooth_collision_cost(const Scene& scene, const SampleSet& samples,
                             const CostParams& params);

CostBreakdown total_loss(const Scene& scene, const SplinePath& path, const CostParams& params);
// Same, on already-evaluated samples.
CostBreakdown breakdown_of(const Scene& scene, const SampleSet& samples,
                           const CostParams& params);

template <class T>
T chomp_point_cost(const T& sdf_value, const ChompParams& params) {
  const double eps = params.epsilon;
  if (value(sdf_value) < 0.0) return -sdf_value + 0.5 * eps;
  if (value(sdf_value) <= eps) {
    const T d = sdf_value - eps;
    return d * d / (2.0 * eps);
  }
  return T(0.0);
}

double chomp_total_loss(const Scene& scene, const SplinePath& path,
                        const CostParams& cost_params, const ChompParams& chomp);
double chomp_total_loss(const Scene& scene, const SampleSet& samples,
                        const ChompParams& chomp);

// Terms shared by the value and the gradient routes. Piecewise-constant
// pieces (tau, Delta, branch conditions) come from the plain values and enter
// as constants.
template <class T>
T polyline_length(std::span<const BasicPoint<T>> points) {
  using std::sqrt;
  T total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    T sq = 0.0;
    for (int d = 0; d < points[i].dim; ++d) {
      const T diff = points[i][d] - points[i - 1][d];
      sq = sq + diff * diff;
    }
    if (value(sq) > 0.0) total = total + sqrt(sq);
  }
  return total;
}

template <class T>
T smooth_collision(const Scene& scene, std::span<const BasicPoint<T>> points,
                   const SampleLabels& labels, double safe_distance) {
  T total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    note_branch(points[i][0], labels.min_sdf[i]);
    if (!labels.colliding(i)) continue;
    note_branch(points[i][0], labels.gap[i]);
    const Obstacle& o = scene.obstacles()[labels.selected[i]];
    const double point_weight = circumference(o) /
        static_cast<double>(labels.colliding_per_obstacle[labels.selected[i]]);
    total = total + point_weight * step_h(signed_distance(o, points[i]), safe_distance);
  }
  return total;
}

template <class T>
T chomp_collision(const Scene& scene, std::span<const BasicPoint<T>> points,
                  const SampleLabels& labels, const ChompParams& params) {
  T total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (scene.empty() || labels.min_sdf[i] > params.epsilon) continue;
    note_branch(points[i][0], labels.min_sdf[i]);
    note_branch(points[i][0], labels.min_sdf[i] - params.epsilon);
    note_branch(points[i][0], labels.gap[i]);
    const Obstacle& o = scene.obstacles()[labels.selected[i]];
    total = total + chomp_point_cost(signed_distance(o, points[i]), params);
  }
  return total;
}

// Scene-feature check: consecutive samples closer than the smallest bounding
// radius, so no obstacle fits between two samples.
bool sampling_resolves_scene(const Scene& scene, std::span<const Point> points);

}  // namespace upr
