#pragma once

// Test-only generators and oracles. Nothing here calls into the code paths it
// is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "upr/geom.hpp"
#include "upr/spline.hpp"

namespace upr::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Point random_point(std::mt19937_64& rng, int dim, double lo, double hi) {
  Point p;
  p.dim = dim;
  for (int i = 0; i < dim; ++i) p[i] = uniform(rng, lo, hi);
  return p;
}

inline Obstacle random_obstacle(std::mt19937_64& rng, int dim, double lo, double hi) {
  const Point c = random_point(rng, dim, lo, hi);
  if (uniform(rng, 0.0, 1.0) < 0.5) return Obstacle::sphere(c, uniform(rng, 0.3, 2.0));
  return Obstacle::box(c, random_point(rng, dim, 0.2, 2.0));
}

// Inside test by coordinates alone.
inline bool strictly_inside(const Obstacle& o, const Point& x) {
  if (const auto* s = std::get_if<Sphere>(&o.shape())) {
    double sq = 0.0;
    for (int i = 0; i < x.dim; ++i) sq += (x[i] - s->center[i]) * (x[i] - s->center[i]);
    return sq < s->radius * s->radius;
  }
  const Box& b = std::get<Box>(o.shape());
  for (int i = 0; i < x.dim; ++i) {
    if (std::abs(x[i] - b.center[i]) >= b.half_extents[i]) return false;
  }
  return true;
}

// Minimises a unimodal function on [lo, hi].
template <class F>
double ternary_min(F f, double lo, double hi, int iterations = 80) {
  for (int it = 0; it < iterations; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return f(0.5 * (lo + hi));
}

// Distance from x to the obstacle boundary by searching over a
// parameterisation of the surface: dense coarse sampling, then local
// nested ternary refinement.
inline double boundary_distance(const Obstacle& o, const Point& x) {
  const int dim = x.dim;
  auto dist = [&](const Point& p) {
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) sq += (p[i] - x[i]) * (p[i] - x[i]);
    return std::sqrt(sq);
  };
  if (const auto* s = std::get_if<Sphere>(&o.shape())) {
    auto at = [&](double theta, double phi) {
      Point p;
      p.dim = dim;
      if (dim == 2) {
        p[0] = s->center[0] + s->radius * std::cos(theta);
        p[1] = s->center[1] + s->radius * std::sin(theta);
      } else {
        p[0] = s->center[0] + s->radius * std::sin(phi) * std::cos(theta);
        p[1] = s->center[1] + s->radius * std::sin(phi) * std::sin(theta);
        p[2] = s->center[2] + s->radius * std::cos(phi);
      }
      return dist(p);
    };
    const int nt = dim == 2 ? 720 : 120;
    const int np = dim == 2 ? 1 : 60;
    double best = std::numeric_limits<double>::infinity();
    double bt = 0.0;
    double bp = 0.5 * kPi;
    for (int i = 0; i < nt; ++i) {
      for (int j = 0; j < np; ++j) {
        const double theta = 2.0 * kPi * i / nt;
        const double phi = dim == 2 ? 0.5 * kPi : kPi * (j + 0.5) / np;
        const double d = at(theta, phi);
        if (d < best) {
          best = d;
          bt = theta;
          bp = phi;
        }
      }
    }
    const double wt = 2.0 * kPi / nt;
    const double wp = kPi / np;
    if (dim == 2) {
      return std::min(best, ternary_min([&](double t) { return at(t, bp); }, bt - wt, bt + wt));
    }
    const double refined = ternary_min(
        [&](double t) {
          return ternary_min([&](double p) { return at(t, p); }, std::max(0.0, bp - wp),
                             std::min(kPi, bp + wp), 50);
        },
        bt - wt, bt + wt, 50);
    return std::min(best, refined);
  }
  // Box: each face is a rectangle and distance to it is convex over the face
  // coordinates, so nested ternary search is exact.
  const Box& b = std::get<Box>(o.shape());
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < dim; ++axis) {
    for (double side : {-1.0, 1.0}) {
      std::vector<int> free;
      for (int k = 0; k < dim; ++k) {
        if (k != axis) free.push_back(k);
      }
      auto face_point = [&](double a, double c) {
        Point p;
        p.dim = dim;
        p[axis] = b.center[axis] + side * b.half_extents[axis];
        p[free[0]] = a;
        if (free.size() > 1) p[free[1]] = c;
        return dist(p);
      };
      const double lo0 = b.center[free[0]] - b.half_extents[free[0]];
      const double hi0 = b.center[free[0]] + b.half_extents[free[0]];
      double d;
      if (free.size() == 1) {
        d = ternary_min([&](double a) { return face_point(a, 0.0); }, lo0, hi0);
      } else {
        const double lo1 = b.center[free[1]] - b.half_extents[free[1]];
        const double hi1 = b.center[free[1]] + b.half_extents[free[1]];
        d = ternary_min(
            [&](double a) {
              return ternary_min([&](double c) { return face_point(a, c); }, lo1, hi1, 60);
            },
            lo0, hi0, 60);
      }
      best = std::min(best, d);
    }
  }
  return best;
}

// Textbook recursive Cox-de Boor definition of N_{i,p}(u), with the right end
// of the domain closed on the last non-empty span.
inline double recursive_basis(const std::vector<double>& knots, int i, int p, double u) {
  if (p == 0) {
    const double lo = knots[static_cast<std::size_t>(i)];
    const double hi = knots[static_cast<std::size_t>(i) + 1];
    if (lo <= u && u < hi) return 1.0;
    if (u == knots.back() && hi == knots.back() && lo < hi) return 1.0;
    return 0.0;
  }
  double out = 0.0;
  const double d1 = knots[i + p] - knots[i];
  const double d2 = knots[i + p + 1] - knots[i + 1];
  if (d1 > 0.0) out += (u - knots[i]) / d1 * recursive_basis(knots, i, p - 1, u);
  if (d2 > 0.0) out += (knots[i + p + 1] - u) / d2 * recursive_basis(knots, i + 1, p - 1, u);
  return out;
}

// Random path whose anchors are scattered in a box, weights in (0.1, 1].
inline SplinePath random_path(std::mt19937_64& rng, int dim, std::size_t anchors, int degree,
                              double lo, double hi, bool random_weights = true) {
  SplinePath path;
  path.degree = degree;
  path.start = random_point(rng, dim, lo, hi);
  path.goal = random_point(rng, dim, lo, hi);
  for (std::size_t k = 0; k < anchors; ++k) {
    path.anchors.push_back(random_point(rng, dim, lo, hi));
    path.weights.push_back(random_weights ? uniform(rng, 0.1, 1.0) : 1.0);
  }
  return path;
}

// Scene whose obstacles do not overlap, checked with coordinate tests on a
// conservative bounding-sphere separation.
inline Scene random_separated_scene(std::mt19937_64& rng, int dim, std::size_t count,
                                    double extent) {
  Bounds bounds;
  bounds.min.dim = bounds.max.dim = dim;
  for (int i = 0; i < dim; ++i) {
    bounds.min[i] = -extent;
    bounds.max[i] = extent;
  }
  std::vector<Obstacle> obstacles;
  int guard = 0;
  while (obstacles.size() < count && guard++ < 10000) {
    Obstacle candidate = random_obstacle(rng, dim, -0.8 * extent, 0.8 * extent);
    bool ok = true;
    for (const Obstacle& o : obstacles) {
      if (distance(o.center(), candidate.center()) <=
          o.bounding_radius() + candidate.bounding_radius()) {
        ok = false;
      }
    }
    if (ok) obstacles.push_back(candidate);
  }
  return Scene(dim, bounds, obstacles);
}

}  // namespace upr::testing
