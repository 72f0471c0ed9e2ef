#include "upr/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <tuple>

#include "upr/error.hpp"

namespace upr {
namespace {

constexpr double kInitialWeightLogit = 3.0;

using ad::Var;

Var logistic_var(const Var& x) { return 1.0 / (1.0 + ad::exp(-x)); }

// Lexicographic ranking of iterates: collision-free first, then objective.
struct Rank {
  bool collides = true;
  double value = std::numeric_limits<double>::infinity();
  double length = std::numeric_limits<double>::infinity();

  bool improves_on(const Rank& other, double tol) const {
    if (collides != other.collides) return !collides;
    return value < other.value - tol;
  }
};

}  // namespace

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Adam::Adam(std::size_t size, AdamConfig config)
    : config_(config), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    fail(Errc::invalid_argument, "Adam parameter/gradient size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
  }
}

void validate(const OptimizerConfig& c) {
  if (!(c.lr_fraction > 0.0)) fail(Errc::config, "learning rate must be positive");
  if (c.max_iterations < 0) fail(Errc::config, "max iterations must be non-negative");
  if (!(c.beta1 > 0.0 && c.beta1 < 1.0) || !(c.beta2 > 0.0 && c.beta2 < 1.0)) {
    fail(Errc::config, "Adam betas must lie in (0, 1)");
  }
  if (!(c.epsilon > 0.0)) fail(Errc::config, "Adam floor must be positive");
  if (c.restarts < 1) fail(Errc::config, "at least one restart is required");
  if (c.check_divisor < 1) fail(Errc::config, "check divisor must be positive");
  if (c.feasibility_steps < 0) fail(Errc::config, "feasibility steps must be non-negative");
  if (c.patience < 1) fail(Errc::config, "patience must be positive");
  if (c.objective == Objective::chomp && !(c.chomp.epsilon > 0.0 && c.chomp.lambda >= 0.0)) {
    fail(Errc::config, "CHOMP parameters must be non-negative with positive epsilon");
  }
  (void)parameter_domain(c.anchors, c.degree);
}

PathObjective::PathObjective(const Scene& scene, const Point& start, const Point& goal,
                             std::size_t anchors, int degree, const CostParams& cost_params,
                             Objective objective, WeightMode weights, ChompParams chomp)
    : scene_(scene),
      start_(start),
      goal_(goal),
      basis_(anchors, degree, cost_params.step),
      cost_params_(cost_params),
      objective_(objective),
      weights_(weights),
      chomp_(chomp) {
  validate(cost_params);
  if (start.dim != scene.dim() || goal.dim != scene.dim()) {
    fail(Errc::invalid_argument, "start/goal dimension differs from scene");
  }
}

std::size_t PathObjective::size() const {
  const std::size_t n = basis_.anchor_count();
  const auto d = static_cast<std::size_t>(scene_.dim());
  return n * d + (weights_ == WeightMode::trainable ? n : 0);
}

std::vector<double> PathObjective::initial_parameters(const SplinePath& path) const {
  std::vector<double> x;
  x.reserve(size());
  for (const Point& a : path.anchors) {
    for (int d = 0; d < a.dim; ++d) x.push_back(a[d]);
  }
  if (weights_ == WeightMode::trainable) {
    for (double w : path.weights) {
      const double clamped = std::clamp(w, kMinWeight, 1.0 - 1e-6);
      x.push_back(std::min(kInitialWeightLogit, std::log(clamped / (1.0 - clamped))));
    }
  }
  return x;
}

SplinePath PathObjective::to_path(std::span<const double> x) const {
  const std::size_t n = basis_.anchor_count();
  const int dim = scene_.dim();
  SplinePath path;
  path.degree = basis_.degree();
  path.start = start_;
  path.goal = goal_;
  for (std::size_t k = 0; k < n; ++k) {
    Point a;
    a.dim = dim;
    for (int d = 0; d < dim; ++d) a[d] = x[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)];
    path.anchors.push_back(a);
    path.weights.push_back(weights_ == WeightMode::trainable
                               ? logistic(x[n * static_cast<std::size_t>(dim) + k])
                               : 1.0);
  }
  return path;
}

PathObjective::Evaluation PathObjective::evaluate(std::span<const double> x,
                                                  std::span<double> grad) {
  const std::size_t n = basis_.anchor_count();
  const int dim = scene_.dim();
  const auto d = static_cast<std::size_t>(dim);
  tape_.clear();

  std::vector<Var> vars;
  vars.reserve(x.size());
  for (double v : x) vars.push_back(tape_.variable(v));

  std::vector<BasicPoint<Var>> controls(n + 2);
  std::vector<Var> weights(n + 2, Var(1.0));
  for (int k = 0; k < dim; ++k) {
    controls.front()[k] = start_[k];
    controls.back()[k] = goal_[k];
  }
  for (auto& c : controls) c.dim = dim;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t k = 0; k < d; ++k) controls[a + 1][static_cast<int>(k)] = vars[a * d + k];
    if (weights_ == WeightMode::trainable) {
      const Var w = logistic_var(vars[n * d + a]);
      weights[a + 1] = w.value() < kMinWeight ? Var(kMinWeight) : w;
    }
  }

  const std::vector<BasicPoint<Var>> points =
      basis_.evaluate<Var>(controls, std::span<const Var>(weights));
  std::vector<Point> plain(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) plain[i] = values_of(points[i]);
  const SampleLabels labels = label_samples(scene_, plain);

  Var total = 0.0;
  switch (objective_) {
    case Objective::ours:
      total = polyline_length<Var>(points) +
              smooth_collision<Var>(scene_, points, labels, cost_params_.safe_distance);
      break;
    case Objective::chomp:
      total = polyline_length<Var>(points) +
              chomp_.lambda * chomp_collision<Var>(scene_, points, labels, chomp_);
      break;
    case Objective::collision_only:
      total = smooth_collision<Var>(scene_, points, labels, cost_params_.safe_distance);
      break;
  }
  if (!std::isfinite(total.value())) fail(Errc::numeric, "non-finite path objective");

  Evaluation ev;
  ev.value = total.value();
  ev.branch_margin = tape_.branch_margin();
  for (std::size_t i = 0; i < plain.size(); ++i) {
    if (labels.colliding(i)) {
      ev.collides = true;
      break;
    }
  }
  if (!grad.empty()) {
    const std::vector<double> adj = tape_.adjoints(total);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      grad[i] = total.is_constant() ? 0.0 : adj[vars[i].index()];
    }
  }
  return ev;
}

bool PathObjective::collides_at(std::span<const double> x, const SampleBasis& basis) const {
  return path_collides(scene_, basis.sample(to_path(x)).points);
}

namespace {

struct RunResult {
  std::vector<double> best;
  Rank rank;
  int iterations = 0;
};

RunResult run_adam(PathObjective& objective, PathObjective* feasibility, std::vector<double> x,
                   const OptimizerConfig& config, double lr, bool rank_by_collision,
                   const SampleBasis* fine) {
  std::vector<double> grad(x.size(), 0.0);
  RunResult run;
  run.best = x;
  int it = 0;
  // Returns true when x becomes the new best iterate.
  auto consider = [&](const PathObjective::Evaluation& ev) {
    Rank rank{rank_by_collision && ev.collides, ev.value, 0.0};
    bool improves = rank.improves_on(run.rank, config.tolerance) || it == 0;
    if (improves && rank_by_collision && !rank.collides && fine != nullptr &&
        objective.collides_at(x, *fine)) {
      rank.collides = true;
      improves = rank.improves_on(run.rank, config.tolerance) || it == 0;
    }
    if (improves) {
      run.rank = rank;
      run.best = x;
    }
    return improves;
  };

  if (feasibility != nullptr) {
    Adam adam(x.size(), AdamConfig{lr, config.beta1, config.beta2, config.epsilon});
    for (; it < config.feasibility_steps && it < config.max_iterations; ++it) {
      const auto ev = objective.evaluate(x, {});
      consider(ev);
      if (!ev.collides) break;
      feasibility->evaluate(x, grad);
      adam.step(x, grad);
    }
  }

  Adam adam(x.size(), AdamConfig{lr, config.beta1, config.beta2, config.epsilon});
  int stall = 0;
  int halvings = 0;
  for (; it <= config.max_iterations; ++it) {
    const auto ev = objective.evaluate(x, grad);
    if (consider(ev)) {
      stall = 0;
    } else if (++stall >= config.patience) {
      if (halvings >= config.plateau_halvings) break;
      ++halvings;
      stall = 0;
      adam.set_learning_rate(0.5 * adam.learning_rate());
    }
    if (it == config.max_iterations) break;
    adam.step(x, grad);
  }
  run.iterations = std::min(it, config.max_iterations);
  return run;
}

}  // namespace

PlanResult optimize_path(const PlanningProblem& problem, const CostParams& cost_params,
                         const OptimizerConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  validate(config);
  validate(cost_params);
  const Scene& scene = problem.scene;
  if (!scene.bounds().contains(problem.start) || !scene.bounds().contains(problem.goal)) {
    fail(Errc::invalid_argument, "start and goal must lie inside the scene bounds");
  }

  PathObjective objective(scene, problem.start, problem.goal, config.anchors, config.degree,
                          cost_params, config.objective, config.weights, config.chomp);
  const double diagonal = scene.bounds().diagonal();
  const double lr = config.lr_fraction * diagonal;
  const bool rank_by_collision = config.objective != Objective::chomp;
  std::optional<PathObjective> feasibility;
  if (config.feasibility_steps > 0 && config.objective == Objective::ours) {
    feasibility.emplace(scene, problem.start, problem.goal, config.anchors, config.degree,
                        cost_params, Objective::collision_only, config.weights);
  }
  std::optional<SampleBasis> fine;
  if (config.check_divisor > 1) {
    fine.emplace(config.anchors, config.degree, cost_params.step / config.check_divisor);
  }
  const SplinePath straight =
      straight_line_spline(problem.start, problem.goal, config.anchors, config.degree);

  PlanResult best;
  Rank best_rank;
  bool have_best = false;
  for (int r = 0; r < config.restarts; ++r) {
    std::vector<double> x = objective.initial_parameters(straight);
    if (r > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                        static_cast<std::uint32_t>(config.seed >> 32),
                        static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> noise(0.0, config.restart_sigma_fraction * diagonal);
      const std::size_t coords = config.anchors * static_cast<std::size_t>(scene.dim());
      for (std::size_t i = 0; i < coords; ++i) x[i] += noise(rng);
    }
    const RunResult run = run_adam(objective, feasibility ? &*feasibility : nullptr, x, config, lr,
                                   rank_by_collision, fine ? &*fine : nullptr);
    const SplinePath path = objective.to_path(run.best);
    const CostBreakdown breakdown =
        breakdown_of(scene, objective.basis().sample(path), cost_params);
    Rank rank{rank_by_collision && run.rank.collides, run.rank.value, breakdown.length};
    const bool better = !have_best || rank.improves_on(best_rank, 0.0) ||
                        (rank.collides == best_rank.collides && rank.value == best_rank.value &&
                         rank.length < best_rank.length);
    if (better) {
      have_best = true;
      best_rank = rank;
      best.path = path;
      best.breakdown = breakdown;
      best.objective = run.rank.value;
      best.iterations = run.iterations;
      best.restart = r;
    }
  }
  best.success = !best.breakdown.collides;
  best.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return best;
}

PlanResult refine_collision_only(const SplinePath& path, const Scene& scene,
                                 const CostParams& cost_params, int steps,
                                 const OptimizerConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  validate(config);
  validate(cost_params);
  path.validate();
  if (steps < 0) fail(Errc::invalid_argument, "refinement steps must be non-negative");
  PathObjective objective(scene, path.start, path.goal, path.anchor_count(), path.degree,
                          cost_params, Objective::collision_only, config.weights);
  std::vector<double> x = objective.initial_parameters(path);
  Adam adam(x.size(), AdamConfig{config.lr_fraction * scene.bounds().diagonal(), config.beta1,
                                 config.beta2, config.epsilon});
  std::vector<double> grad(x.size(), 0.0);
  for (int s = 0; s < steps; ++s) {
    if (objective.evaluate(x, grad).value == 0.0) break;  // zero cost has zero gradient; Adam would not move
    adam.step(x, grad);
  }

  PlanResult result;
  result.path = steps == 0 ? path : objective.to_path(x);
  if (config.weights == WeightMode::fixed) result.path.weights = path.weights;
  result.breakdown = breakdown_of(scene, objective.basis().sample(result.path), cost_params);
  result.objective = result.breakdown.smooth_collision;
  result.iterations = steps;
  result.success = !result.breakdown.collides;
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace upr
