#include "upr/geom.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "upr/error.hpp"

namespace upr {
namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    fail(Errc::invalid_argument, "dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

}  // namespace

Point point(double x, double y) { return Point{{x, y, 0.0}, 2}; }

Point point(double x, double y, double z) { return Point{{x, y, z}, 3}; }

Point point_from(std::span<const double> coords) {
  check_dim(static_cast<int>(coords.size()));
  Point p;
  p.dim = static_cast<int>(coords.size());
  for (int i = 0; i < p.dim; ++i) p[i] = coords[static_cast<std::size_t>(i)];
  return p;
}

double distance(const Point& a, const Point& b) {
  double sq = 0.0;
  for (int i = 0; i < a.dim; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

double norm(const Point& a) {
  double sq = 0.0;
  for (int i = 0; i < a.dim; ++i) sq += a[i] * a[i];
  return std::sqrt(sq);
}

Obstacle Obstacle::sphere(const Point& center, double radius) {
  check_dim(center.dim);
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    fail(Errc::invalid_argument, "sphere radius must be positive and finite");
  }
  return Obstacle(Sphere{center, radius});
}

Obstacle Obstacle::box(const Point& center, const Point& half_extents) {
  check_dim(center.dim);
  if (half_extents.dim != center.dim) {
    fail(Errc::invalid_argument, "box half extents and center differ in dimension");
  }
  for (int i = 0; i < center.dim; ++i) {
    if (!(half_extents[i] > 0.0) || !std::isfinite(half_extents[i])) {
      fail(Errc::invalid_argument, "box half extents must be positive and finite");
    }
  }
  return Obstacle(Box{center, half_extents});
}

int Obstacle::dim() const { return center().dim; }

const Point& Obstacle::center() const {
  return std::visit([](const auto& s) -> const Point& { return s.center; }, shape_);
}

double Obstacle::bounding_radius() const {
  if (const auto* s = std::get_if<Sphere>(&shape_)) return s->radius;
  return norm(std::get<Box>(shape_).half_extents);
}

double sdf(const Obstacle& o, const Point& x) {
  if (x.dim != o.dim()) {
    fail(Errc::invalid_argument, "point dimension " + std::to_string(x.dim) +
                                     " does not match obstacle dimension " +
                                     std::to_string(o.dim()));
  }
  return signed_distance(o, x);
}

double circumference(const Obstacle& o) { return 2.0 * kPi * o.bounding_radius(); }

Point Bounds::center() const {
  Point c;
  c.dim = min.dim;
  for (int i = 0; i < c.dim; ++i) c[i] = 0.5 * (min[i] + max[i]);
  return c;
}

double Bounds::diagonal() const { return distance(min, max); }

bool Bounds::contains(const Point& p) const {
  for (int i = 0; i < p.dim; ++i) {
    if (p[i] < min[i] || p[i] > max[i]) return false;
  }
  return true;
}

Scene::Scene(int dim, Bounds bounds, std::vector<Obstacle> obstacles)
    : dim_(dim), bounds_(std::move(bounds)), obstacles_(std::move(obstacles)) {
  check_dim(dim_);
  if (bounds_.min.dim != dim_ || bounds_.max.dim != dim_) {
    fail(Errc::invalid_argument, "scene bounds dimension mismatch");
  }
  for (int i = 0; i < dim_; ++i) {
    if (!(bounds_.max[i] > bounds_.min[i])) {
      fail(Errc::invalid_argument, "scene bounds must be non-empty on every axis");
    }
  }
  for (const Obstacle& o : obstacles_) {
    if (o.dim() != dim_) fail(Errc::invalid_argument, "obstacle dimension differs from scene");
  }
}

Selection select_object(const Scene& scene, const Point& x) {
  if (scene.empty()) fail(Errc::empty_scene, "object selection on an empty scene");
  if (x.dim != scene.dim()) fail(Errc::invalid_argument, "point dimension differs from scene");
  Selection sel{0, std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
  double second = std::numeric_limits<double>::infinity();
  const auto& obstacles = scene.obstacles();
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const double d = signed_distance(obstacles[i], x);
    if (d < sel.sdf) {
      second = sel.sdf;
      sel.sdf = d;
      sel.index = i;
    } else if (d < second) {
      second = d;
    }
  }
  sel.gap = second - sel.sdf;
  return sel;
}

bool path_collides(const Scene& scene, std::span<const Point> samples) {
  if (scene.empty()) return false;
  return std::any_of(samples.begin(), samples.end(), [&](const Point& p) {
    return select_object(scene, p).sdf < 0.0;
  });
}

}  // namespace upr
