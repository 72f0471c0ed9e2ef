#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include "upr/autodiff.hpp"

namespace upr {

inline constexpr double kPi = std::numbers::pi;

// Point in R^2 or R^3. The scalar is double for plain evaluation and ad::Var
// when the cost is being recorded for differentiation.
template <class T>
struct BasicPoint {
  std::array<T, 3> c{};
  int dim = 2;

  T& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  const T& operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
};

using Point = BasicPoint<double>;

Point point(double x, double y);
Point point(double x, double y, double z);
Point point_from(std::span<const double> coords);

template <class T>
BasicPoint<double> values_of(const BasicPoint<T>& p) {
  Point out;
  out.dim = p.dim;
  for (int i = 0; i < p.dim; ++i) out[i] = value(p[i]);
  return out;
}

double distance(const Point& a, const Point& b);
double norm(const Point& a);

struct Sphere {
  Point center;
  double radius = 1.0;
};

struct Box {
  Point center;
  Point half_extents;
};

class Obstacle {
 public:
  static Obstacle sphere(const Point& center, double radius);
  static Obstacle box(const Point& center, const Point& half_extents);

  int dim() const;
  bool is_sphere() const { return std::holds_alternative<Sphere>(shape_); }
  const std::variant<Sphere, Box>& shape() const { return shape_; }
  const Point& center() const;
  // Radius of the bounding sphere centred on center().
  double bounding_radius() const;

 private:
  explicit Obstacle(std::variant<Sphere, Box> shape) : shape_(std::move(shape)) {}
  std::variant<Sphere, Box> shape_;
};

// Signed distance without dimension checks. Branches (inside/outside, box
// face, axis sign) are decided on plain values and reported as branch margins.
template <class T>
T signed_distance(const Obstacle& o, const BasicPoint<T>& x) {
  using std::sqrt;
  if (const auto* s = std::get_if<Sphere>(&o.shape())) {
    T sq = 0.0;
    for (int i = 0; i < x.dim; ++i) {
      const T d = x[i] - s->center[i];
      sq = sq + d * d;
    }
    if (value(sq) == 0.0) return T(-s->radius);
    note_branch(x[0], std::sqrt(value(sq)));
    return sqrt(sq) - s->radius;
  }
  const Box& b = std::get<Box>(o.shape());
  std::array<T, 3> q{};
  bool outside = false;
  for (int i = 0; i < x.dim; ++i) {
    const double offset = value(x[i]) - b.center[i];
    note_branch(x[i], offset);
    const double sign = offset < 0.0 ? -1.0 : 1.0;
    q[i] = (x[i] - b.center[i]) * sign - b.half_extents[i];
    note_branch(x[i], value(q[i]));
    outside = outside || value(q[i]) > 0.0;
  }
  if (outside) {
    T sq = 0.0;
    for (int i = 0; i < x.dim; ++i) {
      if (value(q[i]) > 0.0) sq = sq + q[i] * q[i];
    }
    return sqrt(sq);
  }
  int best = 0;
  for (int i = 1; i < x.dim; ++i) {
    if (value(q[i]) > value(q[best])) best = i;
  }
  for (int i = 0; i < x.dim; ++i) {
    if (i != best) note_branch(x[i], value(q[best]) - value(q[i]));
  }
  return q[best];
}

// Checked entry point: throws invalid_argument on dimension mismatch.
double sdf(const Obstacle& o, const Point& x);

// R(o): 2*pi times the bounding-sphere radius.
double circumference(const Obstacle& o);

struct Bounds {
  Point min;
  Point max;

  int dim() const { return min.dim; }
  Point center() const;
  double diagonal() const;
  bool contains(const Point& p) const;
};

class Scene {
 public:
  Scene(int dim, Bounds bounds, std::vector<Obstacle> obstacles = {});

  int dim() const { return dim_; }
  const Bounds& bounds() const { return bounds_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  bool empty() const { return obstacles_.empty(); }

 private:
  int dim_;
  Bounds bounds_;
  std::vector<Obstacle> obstacles_;
};

struct Selection {
  std::size_t index = 0;
  double sdf = 0.0;
  // Distance between the best and second-best SDF (infinite for one obstacle).
  double gap = 0.0;
};

// tau: obstacle of minimal SDF, ties to the lowest index.
Selection select_object(const Scene& scene, const Point& x);

bool path_collides(const Scene& scene, std::span<const Point> samples);

}  // namespace upr
