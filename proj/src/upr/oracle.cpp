#include "upr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "upr/error.hpp"

namespace upr {

double GridSpec::cell(int axis) const {
  return (max[axis] - min[axis]) / static_cast<double>(resolution - 1);
}

double GridSpec::cell_diagonal() const { return std::hypot(cell(0), cell(1)); }

Point GridSpec::at(std::size_t i, std::size_t j) const {
  const double n = static_cast<double>(resolution - 1);
  return point(min[0] + (max[0] - min[0]) * static_cast<double>(i) / n,
               min[1] + (max[1] - min[1]) * static_cast<double>(j) / n);
}

void validate(const GridSpec& grid, const Scene& scene) {
  if (grid.resolution < 2) fail(Errc::invalid_argument, "grid resolution must be at least 2");
  if (scene.dim() != 2 || grid.min.dim != 2 || grid.max.dim != 2) {
    fail(Errc::unsupported, "brute force supports 2D instances only");
  }
  const Bounds& b = scene.bounds();
  for (int i = 0; i < 2; ++i) {
    if (!(grid.min[i] < grid.max[i]) || grid.min[i] < b.min[i] || grid.max[i] > b.max[i]) {
      fail(Errc::invalid_argument, "grid ranges must be non-empty and inside the scene bounds");
    }
  }
}

GridSpec grid_over(const Scene& scene, std::size_t resolution) {
  return GridSpec{scene.bounds().min, scene.bounds().max, resolution};
}

SplinePath one_anchor_path(const PlanningProblem& problem, const Point& anchor) {
  SplinePath path;
  path.degree = 2;
  path.start = problem.start;
  path.goal = problem.goal;
  path.anchors = {anchor};
  path.weights = {1.0};
  return path;
}

namespace {

std::vector<Point> anchor_samples(const PlanningProblem& problem, const SampleBasis& basis,
                                  const Point& anchor) {
  const std::vector<Point> controls{problem.start, anchor, problem.goal};
  const std::vector<double> weights(3, 1.0);
  return basis.evaluate<double>(controls, std::span<const double>(weights));
}

SampleSet as_set(const SampleBasis& basis, std::vector<Point> points) {
  return SampleSet{basis.step(), basis.parameters(), std::move(points)};
}

}  // namespace

double anchor_cost(const PlanningProblem& problem, const SampleBasis& basis, const Point& anchor,
                   const CostParams& params, const CostFunction& fn) {
  const SampleSet samples = as_set(basis, anchor_samples(problem, basis, anchor));
  switch (fn.kind) {
    case CostKind::smooth:
      return breakdown_of(problem.scene, samples, params).total_smooth;
    case CostKind::exact:
      return path_length(samples) + exact_collision_cost(problem.scene, samples);
    case CostKind::chomp:
      return chomp_total_loss(problem.scene, samples, fn.chomp);
  }
  return 0.0;
}

Raster cost_heatmap(const PlanningProblem& problem, const CostParams& params,
                    const GridSpec& grid, const CostFunction& fn) {
  validate(grid, problem.scene);
  validate(params);
  const SampleBasis basis(1, 2, params.step);
  Raster r;
  r.grid = grid;
  r.values.resize(grid.resolution * grid.resolution);
  r.min = std::numeric_limits<double>::infinity();
  r.max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.resolution; ++i) {
    for (std::size_t j = 0; j < grid.resolution; ++j) {
      const double v = anchor_cost(problem, basis, grid.at(i, j), params, fn);
      r.values[i * grid.resolution + j] = v;
      r.min = std::min(r.min, v);
      r.max = std::max(r.max, v);
    }
  }
  return r;
}

BruteForceResult brute_force_optimum(const PlanningProblem& problem, const CostParams& params,
                                     const GridSpec& grid, const CostFunction& fn) {
  BruteForceResult out;
  out.raster = cost_heatmap(problem, params, grid, fn);
  out.best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.resolution; ++i) {
    for (std::size_t j = 0; j < grid.resolution; ++j) {
      const double v = out.raster.at(i, j);
      if (v < out.best_cost) {
        out.best_cost = v;
        out.best_i = i;
        out.best_j = j;
      }
    }
  }
  out.best_anchor = grid.at(out.best_i, out.best_j);
  return out;
}

double local_slack(const PlanningProblem& problem, const CostParams& params,
                   const BruteForceResult& result, const CostFunction& fn) {
  const GridSpec& grid = result.raster.grid;
  const SampleBasis basis(1, 2, params.step);
  const bool opt_collides =
      path_collides(problem.scene, anchor_samples(problem, basis, result.best_anchor));
  double slope = 0.0;
  const auto res = static_cast<long>(grid.resolution);
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      const auto i = static_cast<long>(result.best_i) + di;
      const auto j = static_cast<long>(result.best_j) + dj;
      if ((di == 0 && dj == 0) || i < 0 || j < 0 || i >= res || j >= res) continue;
      const Point nb = grid.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (path_collides(problem.scene, anchor_samples(problem, basis, nb)) != opt_collides) continue;
      const double v = anchor_cost(problem, basis, nb, params, fn);
      slope = std::max(slope, std::abs(v - result.best_cost) / distance(nb, result.best_anchor));
    }
  }
  return grid.cell_diagonal() * slope;
}

PropertyReport verify_properties(const PlanningProblem& problem, const CostParams& params,
                                 const BruteForceResult& optimum, std::size_t trials,
                                 std::uint64_t seed) {
  const Scene& scene = problem.scene;
  const GridSpec& grid = optimum.raster.grid;
  validate(grid, scene);
  const SampleBasis basis(1, 2, params.step);

  PropertyReport report;
  report.trials = trials;
  const SampleSet best = as_set(basis, anchor_samples(problem, basis, optimum.best_anchor));
  report.optimum_length = path_length(best);
  report.optimum_exact = exact_collision_cost(scene, best);

  // Local Lipschitz constant of the length around the optimum cell.
  double lipschitz = 0.0;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      const auto i = static_cast<long>(optimum.best_i) + di;
      const auto j = static_cast<long>(optimum.best_j) + dj;
      const auto res = static_cast<long>(grid.resolution);
      if ((di == 0 && dj == 0) || i < 0 || j < 0 || i >= res || j >= res) continue;
      const Point nb = grid.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const double l = path_length(anchor_samples(problem, basis, nb));
      lipschitz = std::max(lipschitz, std::abs(l - report.optimum_length) /
                                          distance(nb, optimum.best_anchor));
    }
  }
  report.gp_slack = grid.cell_diagonal() * lipschitz;
  report.worst_gp_margin = -std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(seed);
  const Bounds& b = scene.bounds();
  std::uniform_real_distribution<double> ux(b.min[0], b.max[0]);
  std::uniform_real_distribution<double> uy(b.min[1], b.max[1]);
  for (std::size_t t = 0; t < trials; ++t) {
    const double x = ux(rng);
    const double y = uy(rng);
    const SampleSet s = as_set(basis, anchor_samples(problem, basis, point(x, y)));
    const double c = exact_collision_cost(scene, s);
    const double l = path_length(s);
    if (report.optimum_exact > c) ++report.mp_violations;
    if (path_collides(scene, s.points) != (c > 0.0)) ++report.np_violations;
    const double margin = report.optimum_length - l - c;
    report.worst_gp_margin = std::max(report.worst_gp_margin, margin);
    if (margin > report.gp_slack) ++report.gp_violations;
  }
  return report;
}

void write_pgm(const Raster& raster, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  const std::size_t n = raster.grid.resolution;
  out << "P5\n" << n << ' ' << n << "\n255\n";
  const double span = raster.max - raster.min;
  // Top row is the largest y.
  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t j = n - 1 - row;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = span > 0.0 ? (raster.at(i, j) - raster.min) / span : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  }
  if (!out) fail(Errc::io, "failed writing '" + path + "'");
}

}  // namespace upr
