#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "upr/io.hpp"
#include "upr/oracle.hpp"
#include "upr/regressor.hpp"
#include "upr/scenegen.hpp"

namespace upr {

struct CalibrationGrid {
  std::vector<double> lambdas;
  std::vector<double> epsilons;

  // lambda = 0.1 * 2^k for k = 0..10; epsilon in {0.05, 0.1, 0.2, 0.5, 1}.
  static CalibrationGrid standard();
};

struct CalibrationCandidate {
  ChompParams params;
  double length = 0.0;
  bool collision_free = false;
};

struct CalibrationResult {
  ChompParams params;
  double reference_length = 0.0;  // our cost's brute-force optimum
  double length = 0.0;            // the chosen candidate's optimum
  std::vector<CalibrationCandidate> candidates;
};

// Brute-forces the CHOMP optimum for every (lambda, epsilon) and keeps the
// collision-free candidate whose length is closest to our optimum's, within
// 2%. Ties keep the earlier grid entry (lambda-major).
CalibrationResult calibrate_chomp(const ProblemSample& problem, const CostParams& cost,
                                  const CalibrationGrid& grid = CalibrationGrid::standard(),
                                  std::size_t resolution = 201);

enum class Method { ours_direct, chomp_calibrated, chomp_uncalibrated, ours_network, ours_network_refine };
std::string method_name(Method m);
Method parse_method(const std::string& name);

enum class ChompSolver { brute_force, gradient };

struct BenchmarkConfig {
  SceneFamily family = SceneFamily::simple2d;
  std::size_t problems = 150;
  std::uint64_t seed = 0;
  double collide_fraction = 1.0;  // box world only; simple-2D always collides
  std::vector<Method> methods;
  CostParams cost{0.01, 0.0};
  OptimizerConfig optimizer;
  // Unset: calibrated on calibration_problem() at run time.
  std::optional<ChompParams> chomp_calibrated;
  ChompParams chomp_uncalibrated{1.0, 1.0};
  // Brute force needs one anchor in 2D; the box world always uses gradient.
  ChompSolver chomp_solver = ChompSolver::brute_force;
  std::size_t grid_resolution = 201;
  std::string checkpoint;  // network methods
  int refine_steps = 6;
  std::size_t workers = 1;

  static BenchmarkConfig defaults(SceneFamily family);
};

void validate(const BenchmarkConfig& config);
io::json to_json(const BenchmarkConfig& config);
BenchmarkConfig benchmark_config_from_json(const io::json& j);
// FNV-1a of the canonical (key-sorted, compact) JSON, as 16 hex digits.
std::string config_hash(const BenchmarkConfig& config);

struct ProblemRecord {
  std::string method;
  std::size_t problem_id = 0;
  bool success = false;
  double length = 0.0;
  double length_ratio = 0.0;
  double exact_collision = 0.0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // non-empty when the method threw
};

struct MethodRow {
  std::string method;
  std::size_t problems = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double mean_length_ratio = 0.0;  // successful problems only
  double mean_wall_ms = 0.0;
};

struct BenchmarkReport {
  std::vector<MethodRow> rows;
  std::vector<ProblemRecord> records;  // sorted by method order, then problem
  std::uint64_t seed = 0;
  std::string config_hash;
  io::json config;
  std::optional<CalibrationResult> calibration;
};

// `net` overrides config.checkpoint for the network methods.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, const MlpNet* net = nullptr);

// Timing fields are left out unless requested, so equal seeds and configs
// give equal bytes.
io::json report_json(const BenchmarkReport& report, bool include_timing);
// Columns: method, problem_id, success, length, length_ratio, wall_ms, seed.
std::string records_csv(const BenchmarkReport& report);
// Writes report.json and records.csv into `dir`.
void write_report(const BenchmarkReport& report, const std::string& dir);

// Oracle property checks (MP, NP, GP) on generated simple-2D instances, each
// against its brute-force exact-cost optimum.
struct PropertySuiteReport {
  std::uint64_t seed = 0;
  std::size_t instances = 0;
  std::size_t trials_per_instance = 0;
  std::size_t mp_violations = 0;
  std::size_t np_violations = 0;
  std::size_t gp_violations = 0;
  std::vector<PropertyReport> reports;
};
PropertySuiteReport run_property_suite(std::uint64_t seed, std::size_t instances, std::size_t trials,
                                       std::size_t resolution = 201);
io::json to_json(const PropertySuiteReport& r);

// Tape gradients against central differences: the path objective on random
// colliding configurations away from branch switches, and the network loss
// at several initialisations.
struct GradcheckSuiteReport {
  std::uint64_t seed = 0;
  std::size_t cost_configurations = 0;
  std::size_t cost_rejected = 0;  // too close to a branch switch
  double cost_max_rel_error = 0.0;
  std::size_t net_initializations = 0;
  std::size_t net_checked = 0;
  std::size_t net_skipped = 0;
  double net_max_rel_error = 0.0;
};
GradcheckSuiteReport run_gradcheck_suite(std::uint64_t seed, std::size_t cost_configurations = 50,
                                         std::size_t net_initializations = 10);
io::json to_json(const GradcheckSuiteReport& r);

struct LabeledPath {
  std::string label;
  SplinePath path;
};

// Standalone SVG of a 2D problem: optional heatmap, obstacles, paths sampled
// at `step`, start and goal markers.
std::string render_svg(const PlanningProblem& problem, const std::vector<LabeledPath>& paths,
                       const Raster* heatmap = nullptr, double step = 0.01);
void write_svg(const std::string& svg, const std::string& path);

}  // namespace upr
