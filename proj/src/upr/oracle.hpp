#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "upr/cost.hpp"
#include "upr/optimizer.hpp"

namespace upr {

// Anchor positions on a regular lattice, `resolution` points per axis with
// both range ends included.
struct GridSpec {
  Point min;
  Point max;
  std::size_t resolution = 201;

  double cell(int axis) const;
  double cell_diagonal() const;
  Point at(std::size_t i, std::size_t j) const;
};

void validate(const GridSpec& grid, const Scene& scene);
GridSpec grid_over(const Scene& scene, std::size_t resolution = 201);

enum class CostKind { smooth, exact, chomp };

struct CostFunction {
  CostKind kind = CostKind::smooth;
  ChompParams chomp;
};

// values[i * resolution + j] is the cost with the anchor at grid point
// (i along x, j along y).
struct Raster {
  GridSpec grid;
  std::vector<double> values;
  double min = 0.0;
  double max = 0.0;

  double at(std::size_t i, std::size_t j) const { return values[i * grid.resolution + j]; }
};

struct BruteForceResult {
  Point best_anchor;
  std::size_t best_i = 0;
  std::size_t best_j = 0;
  double best_cost = 0.0;
  Raster raster;
};

// One free anchor, degree 2, unit weights.
SplinePath one_anchor_path(const PlanningProblem& problem, const Point& anchor);

double anchor_cost(const PlanningProblem& problem, const SampleBasis& basis, const Point& anchor,
                   const CostParams& params, const CostFunction& fn);

// Ties go to the lexicographically smallest (i, j).
BruteForceResult brute_force_optimum(const PlanningProblem& problem, const CostParams& params,
                                     const GridSpec& grid, const CostFunction& fn = {});

// Cell diagonal times the largest cost slope from the optimum cell to a
// neighbour with the same collision status. Neighbours across an obstacle
// boundary are skipped: the cost jumps there and the jump says nothing about
// quantisation error.
double local_slack(const PlanningProblem& problem, const CostParams& params,
                   const BruteForceResult& result, const CostFunction& fn = {});

Raster cost_heatmap(const PlanningProblem& problem, const CostParams& params,
                    const GridSpec& grid, const CostFunction& fn = {});

struct PropertyReport {
  std::size_t trials = 0;
  std::size_t mp_violations = 0;
  std::size_t np_violations = 0;
  std::size_t gp_violations = 0;
  double gp_slack = 0.0;
  double optimum_length = 0.0;
  double optimum_exact = 0.0;
  // Largest l(opt) - l(theta) - c(theta) seen; <= slack when GP holds.
  double worst_gp_margin = 0.0;
};

// `optimum` must come from brute_force_optimum with CostKind::exact.
PropertyReport verify_properties(const PlanningProblem& problem, const CostParams& params,
                                 const BruteForceResult& optimum, std::size_t trials,
                                 std::uint64_t seed);

// 8-bit binary PGM, darker = cheaper.
void write_pgm(const Raster& raster, const std::string& path);

}  // namespace upr
