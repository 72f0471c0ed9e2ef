#include "upr/scenegen.hpp"

#include <cmath>

#include "upr/error.hpp"

namespace upr {
namespace {

constexpr int kBudget = 10000;
constexpr double kSimpleExtent = 5.0;
constexpr double kBoxExtent = 10.0;
constexpr double kEndpointClearance = 0.3;
constexpr double kSimpleMinSeparation = 4.0;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Bounds cube(int dim, double extent) {
  Bounds b;
  b.min.dim = b.max.dim = dim;
  for (int i = 0; i < dim; ++i) {
    b.min[i] = -extent;
    b.max[i] = extent;
  }
  return b;
}

Point random_in(std::mt19937_64& rng, const Bounds& b) {
  Point p;
  p.dim = b.min.dim;
  for (int i = 0; i < p.dim; ++i) p[i] = uniform(rng, b.min[i], b.max[i]);
  return p;
}

double min_sdf(const Scene& scene, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Obstacle& o : scene.obstacles()) best = std::min(best, sdf(o, p));
  return best;
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

bool straight_line_collides(const Scene& scene, const Point& a, const Point& b, double spacing) {
  if (!(spacing > 0.0)) fail(Errc::invalid_argument, "spacing must be positive");
  const double len = distance(a, b);
  const auto segments = static_cast<std::size_t>(std::max(1.0, std::ceil(len / spacing)));
  Point p = a;
  for (std::size_t k = 0; k <= segments; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(segments);
    for (int i = 0; i < a.dim; ++i) p[i] = a[i] + t * (b[i] - a[i]);
    if (min_sdf(scene, p) < 0.0) return true;
  }
  return false;
}

FamilyDefaults family_defaults(SceneFamily family) {
  FamilyDefaults d;
  d.degree = 2;
  if (family == SceneFamily::simple2d) {
    d.anchors = 1;
    d.cost = CostParams{0.01, 0.0};
    d.max_obstacles = 2;
    // One anchor is cheap to restart, and a wider spread reaches detours
    // around the far side of long boxes.
    d.optimizer.restarts = 20;
    d.optimizer.restart_sigma_fraction = 0.2;
  } else {
    d.anchors = 10;
    d.cost = CostParams{0.05, 5.0};
    d.max_obstacles = 10;
  }
  d.optimizer.anchors = d.anchors;
  d.optimizer.degree = d.degree;
  return d;
}

SceneFamily parse_family(const std::string& name) {
  if (name == "simple2d") return SceneFamily::simple2d;
  if (name == "boxworld3d") return SceneFamily::boxworld3d;
  fail(Errc::config, "unknown scene family '" + name + "'");
}

std::string family_name(SceneFamily family) {
  return family == SceneFamily::simple2d ? "simple2d" : "boxworld3d";
}

Scene random_simple2d_scene(std::mt19937_64& rng) {
  const Bounds bounds = cube(2, kSimpleExtent);
  for (int attempt = 0; attempt < kBudget; ++attempt) {
    const double r = uniform(rng, 0.5, 2.0);
    const Point sc = point(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
    const Point bc = point(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
    const Point half = point(uniform(rng, 0.2, 2.0), uniform(rng, 0.2, 2.0));
    const Obstacle box = Obstacle::box(bc, half);
    if (sdf(box, sc) <= r + 0.1) continue;  // keep a gap between the two
    return Scene(2, bounds, {box, Obstacle::sphere(sc, r)});
  }
  fail(Errc::generation, "simple-2D scene rejection budget exhausted");
}

Scene random_boxworld_scene(std::mt19937_64& rng) {
  std::vector<Obstacle> boxes;
  for (int k = 0; k < 10; ++k) {
    Point c = point(0, 0, 0);
    Point half = point(0, 0, 0);
    for (int i = 0; i < 3; ++i) {
      c[i] = uniform(rng, -kBoxExtent, kBoxExtent);
      half[i] = std::bernoulli_distribution(0.5)(rng) ? 2.5 : 5.0;
    }
    boxes.push_back(Obstacle::box(c, half));
  }
  return Scene(3, cube(3, kBoxExtent), std::move(boxes));
}

bool one_anchor_feasible(const Scene& scene, const Point& start, const Point& goal, int cells,
                         double step) {
  if (scene.dim() != 2) fail(Errc::unsupported, "feasibility grid needs a 2D scene");
  const SampleBasis basis(1, 2, step);
  const Bounds& b = scene.bounds();
  std::vector<Point> controls{start, start, goal};
  const std::vector<double> weights(3, 1.0);
  for (int i = 0; i <= cells; ++i) {
    for (int j = 0; j <= cells; ++j) {
      controls[1] = point(b.min[0] + (b.max[0] - b.min[0]) * i / cells,
                          b.min[1] + (b.max[1] - b.min[1]) * j / cells);
      const auto pts = basis.evaluate<double>(controls, std::span<const double>(weights));
      if (!path_collides(scene, pts)) return true;
    }
  }
  return false;
}

ProblemSample sample_endpoints(const Scene& scene, SceneFamily family, bool want_collision,
                               std::mt19937_64& rng) {
  const bool simple = family == SceneFamily::simple2d;
  for (int attempt = 0; attempt < kBudget; ++attempt) {
    const Point s = random_in(rng, scene.bounds());
    const Point g = random_in(rng, scene.bounds());
    if (min_sdf(scene, s) < kEndpointClearance || min_sdf(scene, g) < kEndpointClearance) continue;
    if (simple && distance(s, g) < kSimpleMinSeparation) continue;
    if (straight_line_collides(scene, s, g) != want_collision) continue;
    if (simple && want_collision && !one_anchor_feasible(scene, s, g)) continue;
    return ProblemSample{scene, s, g, want_collision};
  }
  fail(Errc::generation, "endpoint rejection budget exhausted");
}

bool mixture_flag(double f, std::size_t index) {
  if (!(f >= 0.0 && f <= 1.0)) fail(Errc::invalid_argument, "collide fraction must lie in [0, 1]");
  const auto before = std::floor(static_cast<double>(index) * f + 0.5);
  const auto after = std::floor(static_cast<double>(index + 1) * f + 0.5);
  return after > before;
}

namespace {

Scene random_scene(SceneFamily family, std::mt19937_64& rng) {
  return family == SceneFamily::simple2d ? random_simple2d_scene(rng) : random_boxworld_scene(rng);
}

// A scene can make one flag impossible (no free straight line, say), so the
// scene is redrawn when its endpoint budget runs out.
ProblemSample draw(SceneFamily family, bool want_collision, std::mt19937_64& rng) {
  for (int scene_attempt = 0; scene_attempt < 100; ++scene_attempt) {
    const Scene scene = random_scene(family, rng);
    try {
      return sample_endpoints(scene, family, want_collision, rng);
    } catch (const Error& e) {
      if (e.code() != Errc::generation) throw;
    }
  }
  fail(Errc::generation, "problem rejection budget exhausted");
}

}  // namespace

std::vector<ProblemSample> gen_simple2d(std::uint64_t seed, std::size_t count) {
  if (count < 1) fail(Errc::invalid_argument, "count must be at least 1");
  std::vector<ProblemSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = seeded(seed, 1, i);
    out.push_back(draw(SceneFamily::simple2d, true, rng));
  }
  return out;
}

std::vector<ProblemSample> gen_boxworld3d(std::uint64_t seed, std::size_t count,
                                          double collide_fraction) {
  if (count < 1) fail(Errc::invalid_argument, "count must be at least 1");
  std::vector<ProblemSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = seeded(seed, 2, i);
    out.push_back(draw(SceneFamily::boxworld3d, mixture_flag(collide_fraction, i), rng));
  }
  return out;
}

ProblemSample sample_problem(SceneFamily family, double collide_fraction, std::uint64_t seed,
                             std::size_t index) {
  const bool flag = mixture_flag(collide_fraction, index);
  auto rng = seeded(seed, family == SceneFamily::simple2d ? 3 : 4, index);
  return draw(family, flag, rng);
}

ProblemSample calibration_problem() {
  Scene scene(2, cube(2, kSimpleExtent), {Obstacle::sphere(point(0, 0), 1.0)});
  return ProblemSample{scene, point(-3, 0), point(3, 0), true};
}

}  // namespace upr
