#include "upr/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "upr/error.hpp"

namespace upr {

void validate(const CostParams& params) {
  if (!(params.step > 0.0) || !std::isfinite(params.step)) {
    fail(Errc::invalid_argument, "sampling step must be positive");
  }
  if (!(params.safe_distance >= 0.0) || !std::isfinite(params.safe_distance)) {
    fail(Errc::invalid_argument, "safe distance must be non-negative");
  }
}

void validate(const ChompParams& params) {
  if (!(params.lambda > 0.0) || !std::isfinite(params.lambda) ||
      !(params.epsilon > 0.0) || !std::isfinite(params.epsilon)) {
    fail(Errc::invalid_argument, "CHOMP lambda and epsilon must be finite and positive");
  }
}

SampleLabels label_samples(const Scene& scene, std::span<const Point> points) {
  SampleLabels labels;
  labels.selected.assign(points.size(), 0);
  labels.min_sdf.assign(points.size(), std::numeric_limits<double>::infinity());
  labels.gap.assign(points.size(), std::numeric_limits<double>::infinity());
  labels.colliding_per_obstacle.assign(scene.obstacles().size(), 0);
  if (scene.empty()) return labels;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Selection sel = select_object(scene, points[i]);
    labels.selected[i] = sel.index;
    labels.min_sdf[i] = sel.sdf;
    labels.gap[i] = sel.gap;
    if (sel.sdf < 0.0) ++labels.colliding_per_obstacle[sel.index];
  }
  return labels;
}

double path_length(std::span<const Point> points) {
  if (points.size() < 2) fail(Errc::invalid_argument, "path length needs at least two samples");
  return polyline_length<double>(points);
}

double path_length(const SampleSet& samples) { return path_length(samples.points); }

double exact_collision_cost(const Scene& scene, const SampleSet& samples) {
  double total = 0.0;
  for (const Obstacle& o : scene.obstacles()) {
    const bool hit = std::any_of(samples.points.begin(), samples.points.end(),
                                 [&](const Point& p) { return signed_distance(o, p) < 0.0; });
    if (hit) total += circumference(o);
  }
  return total;
}

double pointwise_collision_cost(const Scene& scene, const SampleSet& samples) {
  const SampleLabels labels = label_samples(scene, samples.points);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.points.size(); ++i) {
    if (!labels.colliding(i)) continue;
    const std::size_t o = labels.selected[i];
    total += circumference(scene.obstacles()[o]) /
             static_cast<double>(labels.colliding_per_obstacle[o]);
  }
  return total;
}

std::size_t delta_count(const Scene& scene, const SampleSet& samples, std::size_t index) {
  if (index >= samples.points.size()) fail(Errc::invalid_argument, "sample index out of range");
  const Selection sel = select_object(scene, samples.points[index]);
  if (!(sel.sdf < 0.0)) {
    fail(Errc::contract, "Delta is only defined for colliding samples (index " +
                             std::to_string(index) + ")");
  }
  std::size_t count = 0;
  for (const Point& p : samples.points) {
    const Selection other = select_object(scene, p);
    if (other.index == sel.index && other.sdf < 0.0) ++count;
  }
  return count;
}

double point_cost(const Scene& scene, const SampleSet& samples, std::size_t index) {
  if (index >= samples.points.size()) fail(Errc::invalid_argument, "sample index out of range");
  if (scene.empty()) return 0.0;
  const Selection sel = select_object(scene, samples.points[index]);
  if (!(sel.sdf < 0.0)) return 0.0;
  return circumference(scene.obstacles()[sel.index]) /
         static_cast<double>(delta_count(scene, samples, index));
}

double smooth_collision_cost(const Scene& scene, const SampleSet& samples,
                             const CostParams& params) {
  const SampleLabels labels = label_samples(scene, samples.points);
  return smooth_collision<double>(scene, samples.points, labels, params.safe_distance);
}

CostBreakdown breakdown_of(const Scene& scene, const SampleSet& samples,
                           const CostParams& params) {
  CostBreakdown b;
  b.length = path_length(samples);
  b.exact_collision = exact_collision_cost(scene, samples);
  b.smooth_collision = smooth_collision_cost(scene, samples, params);
  b.total_smooth = b.length + b.smooth_collision;
  b.collides = b.exact_collision > 0.0;
  return b;
}

CostBreakdown total_loss(const Scene& scene, const SplinePath& path, const CostParams& params) {
  validate(params);
  if (path.dim() != scene.dim()) fail(Errc::invalid_argument, "path and scene differ in dimension");
  return breakdown_of(scene, sample_path(path, params.step), params);
}

double chomp_total_loss(const Scene& scene, const SampleSet& samples,
                        const ChompParams& chomp) {
  const SampleLabels labels = label_samples(scene, samples.points);
  return path_length(samples) +
         chomp.lambda * chomp_collision<double>(scene, samples.points, labels, chomp);
}

double chomp_total_loss(const Scene& scene, const SplinePath& path,
                        const CostParams& cost_params, const ChompParams& chomp) {
  validate(cost_params);
  return chomp_total_loss(scene, sample_path(path, cost_params.step), chomp);
}

bool sampling_resolves_scene(const Scene& scene, std::span<const Point> points) {
  if (scene.empty()) return true;
  double min_radius = std::numeric_limits<double>::infinity();
  for (const Obstacle& o : scene.obstacles()) min_radius = std::min(min_radius, o.bounding_radius());
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (distance(points[i], points[i - 1]) >= min_radius) return false;
  }
  return true;
}

}  // namespace upr
