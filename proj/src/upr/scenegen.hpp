#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "upr/geom.hpp"
#include "upr/optimizer.hpp"

namespace upr {

struct ProblemSample {
  Scene scene;
  Point start;
  Point goal;
  bool straight_line_collides = false;

  PlanningProblem problem() const { return {scene, start, goal}; }
};

// Dense check of the segment a-b with sample spacing at most `spacing`.
bool straight_line_collides(const Scene& scene, const Point& a, const Point& b,
                            double spacing = 0.005);

enum class SceneFamily { simple2d, boxworld3d };

// Workspace and planning settings belonging to each family.
struct FamilyDefaults {
  std::size_t anchors;
  int degree;
  CostParams cost;
  std::size_t max_obstacles;
  OptimizerConfig optimizer;
};
FamilyDefaults family_defaults(SceneFamily family);

SceneFamily parse_family(const std::string& name);
std::string family_name(SceneFamily family);

// One box and one sphere in [-5, 5]^2, non-overlapping.
Scene random_simple2d_scene(std::mt19937_64& rng);
// Ten boxes with sides in {5, 10}, centres uniform in [-10, 10]^3.
Scene random_boxworld_scene(std::mt19937_64& rng);

// True when some one-anchor quadratic path inside the bounds is collision
// free, found by a coarse grid over the anchor.
bool one_anchor_feasible(const Scene& scene, const Point& start, const Point& goal,
                         int cells = 40, double step = 0.01);

// Instances whose straight line collides and which admit a one-anchor
// collision-free path.
std::vector<ProblemSample> gen_simple2d(std::uint64_t seed, std::size_t count);

// Start/goal alternate between colliding and free straight lines, colliding
// first. `collide_fraction` is realised exactly over every window of the
// alternation pattern.
std::vector<ProblemSample> gen_boxworld3d(std::uint64_t seed, std::size_t count,
                                          double collide_fraction = 0.5);

// Draws start and goal for `scene` until the straight-line flag equals
// `want_collision`. Simple-2D instances that should collide must also be
// one-anchor feasible.
ProblemSample sample_endpoints(const Scene& scene, SceneFamily family, bool want_collision,
                               std::mt19937_64& rng);

// Whether sample `index` of a stream with the given collide fraction should
// have a colliding straight line. Deterministic; exactly round(f * m) of any
// prefix of length m.
bool mixture_flag(double collide_fraction, std::size_t index);

// Fresh scene plus endpoints, the regressor's training distribution.
ProblemSample sample_problem(SceneFamily family, double collide_fraction, std::uint64_t seed,
                             std::size_t index);

// Unit sphere at the origin between (-3, 0) and (3, 0) in [-5, 5]^2.
ProblemSample calibration_problem();

}  // namespace upr
