#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "upr/cost.hpp"
#include "upr/geom.hpp"
#include "upr/spline.hpp"

namespace upr {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected adaptive moment estimation.
class Adam {
 public:
  Adam(std::size_t size, AdamConfig config);

  void step(std::span<double> params, std::span<const double> grad);
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  double learning_rate() const { return config_.learning_rate; }
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

enum class Objective { ours, chomp, collision_only };
enum class WeightMode { fixed, trainable };

struct OptimizerConfig {
  std::size_t anchors = 1;
  int degree = 2;
  // Adam step size as a fraction of the scene diagonal.
  double lr_fraction = 0.05;
  int max_iterations = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int restarts = 5;
  double tolerance = 1e-8;
  int patience = 50;
  // Learning-rate halvings allowed on a plateau before stopping.
  int plateau_halvings = 6;
  double restart_sigma_fraction = 0.1;
  // Each restart first descends on the collision term alone, for at most
  // this many iterations or until the path is collision free. Iterates are
  // still ranked on the full objective. Applies to Objective::ours only.
  int feasibility_steps = 200;
  // Iterates also count as colliding if the path collides when sampled at
  // step / check_divisor (guards against tunnelling between samples).
  int check_divisor = 2;
  WeightMode weights = WeightMode::fixed;
  Objective objective = Objective::ours;
  ChompParams chomp;
  std::uint64_t seed = 0;
};

void validate(const OptimizerConfig& config);

// Default step size for collision-only refinement, which has only a handful
// of steps to leave an obstacle.
inline constexpr double kRefineLrFraction = 0.05;

struct PlanningProblem {
  Scene scene;
  Point start;
  Point goal;
};

struct PlanResult {
  SplinePath path;
  CostBreakdown breakdown;
  double objective = 0.0;  // value of the optimized objective at `path`
  int iterations = 0;
  int restart = 0;
  double wall_ms = 0.0;
  bool success = false;
};

PlanResult optimize_path(const PlanningProblem& problem, const CostParams& cost_params,
                         const OptimizerConfig& config);

// `steps` Adam updates on the smooth collision cost alone; returns the last
// iterate.
PlanResult refine_collision_only(const SplinePath& path, const Scene& scene,
                                 const CostParams& cost_params, int steps,
                                 const OptimizerConfig& config);

// Objective value and gradient for a flat parameter vector (anchors, then raw
// weight logits in trainable mode). Shared by the optimizer and by gradient
// checks.
class PathObjective {
 public:
  PathObjective(const Scene& scene, const Point& start, const Point& goal,
                std::size_t anchors, int degree, const CostParams& cost_params,
                Objective objective, WeightMode weights, ChompParams chomp = {});

  std::size_t size() const;
  std::vector<double> initial_parameters(const SplinePath& path) const;
  SplinePath to_path(std::span<const double> x) const;

  struct Evaluation {
    double value = 0.0;
    bool collides = false;
    double branch_margin = 0.0;
  };
  // Fills `grad` when non-empty.
  Evaluation evaluate(std::span<const double> x, std::span<double> grad);

  // Collision test on a finer sampling of the same path.
  bool collides_at(std::span<const double> x, const SampleBasis& basis) const;

  const SampleBasis& basis() const { return basis_; }

 private:
  const Scene& scene_;
  Point start_;
  Point goal_;
  SampleBasis basis_;
  CostParams cost_params_;
  Objective objective_;
  WeightMode weights_;
  ChompParams chomp_;
  ad::Tape tape_;
};

double logistic(double x);

}  // namespace upr
