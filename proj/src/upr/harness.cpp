#include "upr/harness.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <filesystem>
#include <sstream>
#include <thread>

#include "upr/error.hpp"

namespace upr {
namespace {

constexpr double kCalibrationTolerance = 0.02;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Round-trip precision for report numbers.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CalibrationGrid CalibrationGrid::standard() {
  CalibrationGrid g;
  for (int k = 0; k <= 10; ++k) g.lambdas.push_back(0.1 * std::ldexp(1.0, k));
  g.epsilons = {0.05, 0.1, 0.2, 0.5, 1.0};
  return g;
}

CalibrationResult calibrate_chomp(const ProblemSample& problem, const CostParams& cost,
                                  const CalibrationGrid& grid, std::size_t resolution) {
  if (grid.lambdas.empty() || grid.epsilons.empty()) fail(Errc::config, "empty calibration grid");
  if (problem.scene.empty()) fail(Errc::invalid_argument, "calibration needs an obstacle");
  const PlanningProblem prob = problem.problem();
  const GridSpec grid_spec = grid_over(problem.scene, resolution);
  CalibrationResult result;
  const auto ours = brute_force_optimum(prob, cost, grid_spec);
  result.reference_length = total_loss(prob.scene, one_anchor_path(prob, ours.best_anchor), cost).length;

  std::optional<std::size_t> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double lambda : grid.lambdas) {
    for (double eps : grid.epsilons) {
      const ChompParams cp{lambda, eps};
      // lambda = 0 is allowed here; it simply fails the collision test.
      if (!(lambda >= 0.0) || !(eps > 0.0) || !std::isfinite(lambda) || !std::isfinite(eps)) {
        fail(Errc::config, "calibration grid needs lambda >= 0 and epsilon > 0");
      }
      const auto bf = brute_force_optimum(prob, cost, grid_spec, CostFunction{CostKind::chomp, cp});
      const SplinePath path = one_anchor_path(prob, bf.best_anchor);
      CalibrationCandidate c;
      c.params = cp;
      c.length = total_loss(prob.scene, path, cost).length;
      c.collision_free = judged_success(prob.scene, path, cost);
      result.candidates.push_back(c);
      const double gap = std::abs(c.length - result.reference_length);
      if (c.collision_free && gap <= kCalibrationTolerance * result.reference_length && gap < best_gap) {
        best_gap = gap;
        best = result.candidates.size() - 1;
      }
    }
  }
  if (!best) {
    std::string closest = "none collision free";
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& c : result.candidates) {
      if (c.collision_free && std::abs(c.length - result.reference_length) < gap) {
        gap = std::abs(c.length - result.reference_length);
        closest = "lambda " + fmt(c.params.lambda) + ", epsilon " + fmt(c.params.epsilon) +
                  ", length " + fmt(c.length);
      }
    }
    fail(Errc::calibration, "no CHOMP candidate within 2% of length " + fmt(result.reference_length) +
                                "; best attempt: " + closest);
  }
  result.params = result.candidates[*best].params;
  result.length = result.candidates[*best].length;
  return result;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::ours_direct: return "ours-direct";
    case Method::chomp_calibrated: return "chomp-calibrated";
    case Method::chomp_uncalibrated: return "chomp-uncalibrated";
    case Method::ours_network: return "ours-network";
    case Method::ours_network_refine: return "ours-network+refine";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::ours_direct, Method::chomp_calibrated, Method::chomp_uncalibrated,
                   Method::ours_network, Method::ours_network_refine}) {
    if (method_name(m) == name) return m;
  }
  fail(Errc::config, "unknown method '" + name + "'");
}

BenchmarkConfig BenchmarkConfig::defaults(SceneFamily family) {
  const FamilyDefaults d = family_defaults(family);
  BenchmarkConfig c;
  c.family = family;
  c.cost = d.cost;
  c.optimizer = d.optimizer;
  c.methods = {Method::ours_direct, Method::chomp_calibrated, Method::chomp_uncalibrated};
  if (family == SceneFamily::boxworld3d) {
    c.problems = 100;
    c.chomp_solver = ChompSolver::gradient;
  }
  return c;
}

void validate(const BenchmarkConfig& c) {
  if (c.methods.empty()) fail(Errc::config, "benchmark needs at least one method");
  if (c.problems < 1) fail(Errc::config, "benchmark needs at least one problem");
  if (c.workers < 1) fail(Errc::config, "worker count must be positive");
  if (c.refine_steps < 0) fail(Errc::config, "refinement steps must be non-negative");
  if (!(c.collide_fraction >= 0.0 && c.collide_fraction <= 1.0)) {
    fail(Errc::config, "collide fraction must lie in [0, 1]");
  }
  validate(c.cost);
  validate(c.optimizer);
  validate(c.chomp_uncalibrated);
  if (c.chomp_calibrated) validate(*c.chomp_calibrated);
}

io::json to_json(const BenchmarkConfig& c) {
  io::json methods = io::json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  const OptimizerConfig& o = c.optimizer;
  io::json j = {
      {"family", family_name(c.family)},
      {"problems", c.problems},
      {"seed", c.seed},
      {"collide_fraction", c.collide_fraction},
      {"methods", methods},
      {"cost", io::to_json(c.cost)},
      {"optimizer",
       {{"anchors", o.anchors},
        {"degree", o.degree},
        {"lr_fraction", o.lr_fraction},
        {"max_iterations", o.max_iterations},
        {"beta1", o.beta1},
        {"beta2", o.beta2},
        {"epsilon", o.epsilon},
        {"restarts", o.restarts},
        {"tolerance", o.tolerance},
        {"patience", o.patience},
        {"plateau_halvings", o.plateau_halvings},
        {"restart_sigma_fraction", o.restart_sigma_fraction},
        {"feasibility_steps", o.feasibility_steps},
        {"check_divisor", o.check_divisor},
        {"weights", o.weights == WeightMode::fixed ? "fixed" : "trainable"},
        {"seed", o.seed}}},
      {"chomp_uncalibrated", io::to_json(c.chomp_uncalibrated)},
      {"chomp_solver", c.chomp_solver == ChompSolver::brute_force ? "brute_force" : "gradient"},
      {"grid_resolution", c.grid_resolution},
      {"checkpoint", c.checkpoint},
      {"refine_steps", c.refine_steps},
  };
  j["chomp_calibrated"] = c.chomp_calibrated ? io::to_json(*c.chomp_calibrated) : io::json(nullptr);
  return j;
}

BenchmarkConfig benchmark_config_from_json(const io::json& j) {
  try {
    const SceneFamily family =
        j.contains("family") ? parse_family(j.at("family").get<std::string>()) : SceneFamily::simple2d;
    BenchmarkConfig c = BenchmarkConfig::defaults(family);
    if (j.contains("problems")) c.problems = j.at("problems").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("collide_fraction")) c.collide_fraction = j.at("collide_fraction").get<double>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("cost")) c.cost = io::cost_params_from_json(j.at("cost"));
    if (j.contains("optimizer")) c.optimizer = io::optimizer_config_from_json(j.at("optimizer"), c.optimizer);
    if (j.contains("chomp_calibrated") && !j.at("chomp_calibrated").is_null()) {
      c.chomp_calibrated = io::chomp_params_from_json(j.at("chomp_calibrated"));
    }
    if (j.contains("chomp_uncalibrated")) {
      c.chomp_uncalibrated = io::chomp_params_from_json(j.at("chomp_uncalibrated"));
    }
    if (j.contains("chomp_solver")) {
      const std::string s = j.at("chomp_solver").get<std::string>();
      if (s == "brute_force") {
        c.chomp_solver = ChompSolver::brute_force;
      } else if (s == "gradient") {
        c.chomp_solver = ChompSolver::gradient;
      } else {
        fail(Errc::config, "unknown CHOMP solver '" + s + "'");
      }
    }
    if (j.contains("grid_resolution")) c.grid_resolution = j.at("grid_resolution").get<std::size_t>();
    if (j.contains("checkpoint")) c.checkpoint = j.at("checkpoint").get<std::string>();
    if (j.contains("refine_steps")) c.refine_steps = j.at("refine_steps").get<int>();
    if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("malformed benchmark config: ") + e.what());
  }
}

std::string config_hash(const BenchmarkConfig& config) {
  // nlohmann::json (unordered) sorts keys on dump.
  const nlohmann::json canonical = nlohmann::json::parse(to_json(config).dump());
  return fnv1a_hex(canonical.dump());
}

namespace {

struct Task {
  Method method;
  std::size_t problem;
};

struct Context {
  const BenchmarkConfig& config;
  const std::vector<ProblemSample>& problems;
  ChompParams calibrated;
  const MlpNet* net;
};

ProblemRecord finish(const Context& ctx, const Task& t, const SplinePath& path, double ms) {
  const ProblemSample& p = ctx.problems[t.problem];
  ProblemRecord r;
  r.method = method_name(t.method);
  r.problem_id = t.problem;
  r.seed = ctx.config.seed;
  r.wall_ms = ms;
  const SampleSet fine = sample_path(path, 0.5 * ctx.config.cost.step);
  r.exact_collision = exact_collision_cost(p.scene, fine);
  r.success = r.exact_collision == 0.0;
  r.length = path_length(fine);
  const double straight = distance(p.start, p.goal);
  r.length_ratio = straight > 0.0 ? r.length / straight : 1.0;
  return r;
}

SplinePath solve_chomp(const Context& ctx, const ProblemSample& p, const ChompParams& cp) {
  const BenchmarkConfig& c = ctx.config;
  if (c.chomp_solver == ChompSolver::brute_force && p.scene.dim() == 2) {
    const auto bf = brute_force_optimum(p.problem(), c.cost, grid_over(p.scene, c.grid_resolution),
                                        CostFunction{CostKind::chomp, cp});
    return one_anchor_path(p.problem(), bf.best_anchor);
  }
  OptimizerConfig oc = c.optimizer;
  oc.objective = Objective::chomp;
  oc.chomp = cp;
  return optimize_path(p.problem(), c.cost, oc).path;
}

ProblemRecord run_task(const Context& ctx, const Task& t) {
  const ProblemSample& p = ctx.problems[t.problem];
  const BenchmarkConfig& c = ctx.config;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (t.method) {
      case Method::ours_direct: {
        const PlanResult r = optimize_path(p.problem(), c.cost, c.optimizer);
        return finish(ctx, t, r.path, elapsed_ms(t0));
      }
      case Method::chomp_calibrated: {
        const SplinePath path = solve_chomp(ctx, p, ctx.calibrated);
        return finish(ctx, t, path, elapsed_ms(t0));
      }
      case Method::chomp_uncalibrated: {
        const SplinePath path = solve_chomp(ctx, p, c.chomp_uncalibrated);
        return finish(ctx, t, path, elapsed_ms(t0));
      }
      case Method::ours_network: {
        const SplinePath path = ctx.net->forward(p);
        return finish(ctx, t, path, elapsed_ms(t0));
      }
      case Method::ours_network_refine: {
        const SplinePath raw = ctx.net->forward(p);
        const PlanResult r = refine_collision_only(raw, p.scene, c.cost, c.refine_steps, c.optimizer);
        return finish(ctx, t, r.path, elapsed_ms(t0));
      }
    }
    fail(Errc::contract, "unhandled method");
  } catch (const std::exception& e) {
    ProblemRecord r;
    r.method = method_name(t.method);
    r.problem_id = t.problem;
    r.seed = c.seed;
    r.wall_ms = elapsed_ms(t0);
    r.error = e.what();
    return r;
  }
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config, const MlpNet* net) {
  validate(config);
  BenchmarkReport report;
  report.seed = config.seed;
  report.config = to_json(config);
  report.config_hash = config_hash(config);

  auto uses = [&](Method m) {
    return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
  };
  std::optional<MlpNet> loaded;
  if (uses(Method::ours_network) || uses(Method::ours_network_refine)) {
    if (net == nullptr) {
      if (config.checkpoint.empty()) fail(Errc::config, "network methods need a checkpoint");
      loaded = load_checkpoint(config.checkpoint);
      net = &*loaded;
    }
    if (net->config().dim != (config.family == SceneFamily::simple2d ? 2 : 3)) {
      fail(Errc::config, "network dimension does not match the scene family");
    }
  }
  ChompParams calibrated;
  if (uses(Method::chomp_calibrated)) {
    if (config.chomp_calibrated) {
      calibrated = *config.chomp_calibrated;
    } else {
      report.calibration = calibrate_chomp(calibration_problem(), family_defaults(SceneFamily::simple2d).cost,
                                           CalibrationGrid::standard(), config.grid_resolution);
      calibrated = report.calibration->params;
    }
  }

  const std::vector<ProblemSample> problems =
      config.family == SceneFamily::simple2d
          ? gen_simple2d(config.seed, config.problems)
          : gen_boxworld3d(config.seed, config.problems, config.collide_fraction);
  const Context ctx{config, problems, calibrated, net};

  std::vector<Task> tasks;
  for (Method m : config.methods) {
    for (std::size_t i = 0; i < problems.size(); ++i) tasks.push_back({m, i});
  }
  std::vector<ProblemRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) records[k] = run_task(ctx, tasks[k]);
  };
  const std::size_t n_workers = std::min(config.workers, tasks.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.records = std::move(records);

  for (Method m : config.methods) {
    MethodRow row;
    row.method = method_name(m);
    double ratio = 0.0;
    double ms = 0.0;
    for (const ProblemRecord& r : report.records) {
      if (r.method != row.method) continue;
      ++row.problems;
      ms += r.wall_ms;
      if (r.success) {
        ++row.successes;
        ratio += r.length_ratio;
      }
    }
    row.success_rate = static_cast<double>(row.successes) / static_cast<double>(row.problems);
    row.mean_length_ratio = row.successes > 0 ? ratio / static_cast<double>(row.successes) : 0.0;
    row.mean_wall_ms = ms / static_cast<double>(row.problems);
    report.rows.push_back(row);
  }
  return report;
}

io::json report_json(const BenchmarkReport& report, bool include_timing) {
  io::json rows = io::json::array();
  for (const MethodRow& r : report.rows) {
    io::json row = {{"method", r.method},
                    {"problems", r.problems},
                    {"successes", r.successes},
                    {"success_rate", r.success_rate},
                    {"mean_length_ratio", r.mean_length_ratio}};
    if (include_timing) row["mean_wall_ms"] = r.mean_wall_ms;
    rows.push_back(row);
  }
  io::json records = io::json::array();
  for (const ProblemRecord& r : report.records) {
    io::json rec = {{"method", r.method},
                    {"problem_id", r.problem_id},
                    {"success", r.success},
                    {"length", r.length},
                    {"length_ratio", r.length_ratio},
                    {"exact_collision", r.exact_collision},
                    {"seed", r.seed}};
    if (!r.error.empty()) rec["error"] = r.error;
    if (include_timing) rec["wall_ms"] = r.wall_ms;
    records.push_back(rec);
  }
  io::json j = {{"seed", report.seed},
                {"config_hash", report.config_hash},
                {"config", report.config},
                {"rows", rows}};
  if (report.calibration) {
    const CalibrationResult& c = *report.calibration;
    j["calibration"] = {{"lambda", c.params.lambda},
                        {"epsilon", c.params.epsilon},
                        {"reference_length", c.reference_length},
                        {"length", c.length}};
  }
  j["records"] = records;
  return j;
}

std::string records_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "method,problem_id,success,length,length_ratio,wall_ms,seed\n";
  for (const ProblemRecord& r : report.records) {
    out << r.method << ',' << r.problem_id << ',' << (r.success ? 1 : 0) << ',' << fmt(r.length) << ','
        << fmt(r.length_ratio) << ',' << fmt(r.wall_ms) << ',' << r.seed << '\n';
  }
  return out.str();
}

void write_report(const BenchmarkReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  io::write_file((base / "report.json").string(), report_json(report, true).dump(2) + "\n");
  io::write_file((base / "records.csv").string(), records_csv(report));
}

PropertySuiteReport run_property_suite(std::uint64_t seed, std::size_t instances, std::size_t trials,
                                       std::size_t resolution) {
  if (trials < 1) fail(Errc::invalid_argument, "trial count must be positive");
  PropertySuiteReport out;
  out.seed = seed;
  out.instances = instances;
  out.trials_per_instance = trials;
  const CostParams cost = family_defaults(SceneFamily::simple2d).cost;
  const auto problems = gen_simple2d(seed, instances);
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const PlanningProblem prob = problems[i].problem();
    const auto opt = brute_force_optimum(prob, cost, grid_over(prob.scene, resolution),
                                         CostFunction{CostKind::exact, {}});
    const PropertyReport r = verify_properties(prob, cost, opt, trials, seed * 1000003u + i);
    out.mp_violations += r.mp_violations;
    out.np_violations += r.np_violations;
    out.gp_violations += r.gp_violations;
    out.reports.push_back(r);
  }
  return out;
}

io::json to_json(const PropertySuiteReport& r) {
  io::json per = io::json::array();
  for (const PropertyReport& p : r.reports) per.push_back(io::to_json(p));
  return {{"seed", r.seed},
          {"instances", r.instances},
          {"trials_per_instance", r.trials_per_instance},
          {"mp_violations", r.mp_violations},
          {"np_violations", r.np_violations},
          {"gp_violations", r.gp_violations},
          {"instances_detail", per}};
}

GradcheckSuiteReport run_gradcheck_suite(std::uint64_t seed, std::size_t cost_configurations,
                                         std::size_t net_initializations) {
  constexpr double kStep = 1e-5;
  constexpr double kMinMargin = 1e-3;
  GradcheckSuiteReport out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  const auto simple = gen_simple2d(seed, 8);
  const auto boxes = gen_boxworld3d(seed, 4, 1.0);
  std::size_t attempts = 0;
  while (out.cost_configurations < cost_configurations) {
    if (++attempts > 200 * std::max<std::size_t>(cost_configurations, 1)) {
      fail(Errc::numeric, "too few gradient-check configurations away from branch switches");
    }
    const bool three_d = attempts % 3 == 0;
    const ProblemSample& p = three_d ? boxes[attempts % boxes.size()] : simple[attempts % simple.size()];
    const FamilyDefaults d = family_defaults(three_d ? SceneFamily::boxworld3d : SceneFamily::simple2d);
    const std::size_t anchors = three_d ? 3 : 2;
    const CostParams cost{three_d ? 0.05 : 0.02, d.cost.safe_distance};
    PathObjective f(p.scene, p.start, p.goal, anchors, 2, cost, Objective::ours, WeightMode::trainable);
    std::vector<double> x(f.size());
    const Bounds& b = p.scene.bounds();
    const auto dim = static_cast<std::size_t>(p.scene.dim());
    for (std::size_t k = 0; k < anchors; ++k) {
      for (std::size_t i = 0; i < dim; ++i) {
        const int axis = static_cast<int>(i);
        x[k * dim + i] = std::uniform_real_distribution<double>(b.min[axis], b.max[axis])(rng);
      }
      x[anchors * dim + k] = std::uniform_real_distribution<double>(-1.5, 2.5)(rng);
    }
    std::vector<double> g(x.size());
    const auto ev = f.evaluate(x, g);
    // Only paths through an obstacle exercise the collision term.
    if (!ev.collides || ev.branch_margin <= kMinMargin) {
      ++out.cost_rejected;
      continue;
    }
    const auto rep = ad::compare_central_differences(
        [&](std::span<const double> y) { return f.evaluate(y, {}).value; }, x, g, kStep);
    out.cost_max_rel_error = std::max(out.cost_max_rel_error, rep.max_rel_error);
    ++out.cost_configurations;
  }

  const TrainConfig t = train_defaults(SceneFamily::simple2d);
  std::vector<ProblemSample> batch;
  for (std::size_t i = 0; i < 4; ++i) batch.push_back(sample_problem(SceneFamily::simple2d, 0.5, seed, i));
  for (std::size_t k = 0; k < net_initializations; ++k) {
    NetConfig nc = t.net;
    // Trainable weights put the weight logits on the checked path too.
    nc.weights = WeightMode::trainable;
    nc.seed = seed * 7919u + k;
    const MlpNet net(nc);
    const NetGradCheck r = grad_check_network(net, batch, t.cost, 20, 1e-6, nc.seed);
    out.net_max_rel_error = std::max(out.net_max_rel_error, r.max_rel_error);
    out.net_checked += r.checked;
    out.net_skipped += r.skipped;
    ++out.net_initializations;
  }
  return out;
}

io::json to_json(const GradcheckSuiteReport& r) {
  return {{"seed", r.seed},
          {"cost_configurations", r.cost_configurations},
          {"cost_rejected", r.cost_rejected},
          {"cost_max_rel_error", r.cost_max_rel_error},
          {"net_initializations", r.net_initializations},
          {"net_checked", r.net_checked},
          {"net_skipped", r.net_skipped},
          {"net_max_rel_error", r.net_max_rel_error}};
}

namespace {

std::string base64(const std::vector<unsigned char>& data) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < data.size(); i += 3) {
    const std::uint32_t b0 = data[i];
    const std::uint32_t b1 = i + 1 < data.size() ? data[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < data.size() ? data[i + 2] : 0;
    const std::uint32_t v = (b0 << 16) | (b1 << 8) | b2;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < data.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += i + 2 < data.size() ? kAlphabet[v & 63] : '=';
  }
  return out;
}

void put_le(std::vector<unsigned char>& b, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

// 24-bit BMP, cheap cells dark blue, expensive cells yellow. BMP rows run
// bottom-up, matching increasing y.
std::vector<unsigned char> heatmap_bmp(const Raster& r) {
  const auto n = static_cast<std::uint32_t>(r.grid.resolution);
  const std::uint32_t row_bytes = (3 * n + 3) & ~3u;
  std::vector<unsigned char> b;
  b.push_back('B');
  b.push_back('M');
  put_le(b, 54 + row_bytes * n, 4);
  put_le(b, 0, 4);
  put_le(b, 54, 4);
  put_le(b, 40, 4);
  put_le(b, n, 4);
  put_le(b, n, 4);
  put_le(b, 1, 2);
  put_le(b, 24, 2);
  put_le(b, 0, 4);
  put_le(b, row_bytes * n, 4);
  put_le(b, 2835, 4);
  put_le(b, 2835, 4);
  put_le(b, 0, 4);
  put_le(b, 0, 4);
  const double span = r.max > r.min ? r.max - r.min : 1.0;
  for (std::uint32_t j = 0; j < n; ++j) {
    for (std::uint32_t i = 0; i < n; ++i) {
      const double t = std::clamp((r.at(i, j) - r.min) / span, 0.0, 1.0);
      b.push_back(static_cast<unsigned char>(std::lround(255 * (1.0 - t) * 0.6)));  // blue
      b.push_back(static_cast<unsigned char>(std::lround(255 * t * 0.9)));          // green
      b.push_back(static_cast<unsigned char>(std::lround(255 * t)));                // red
    }
    for (std::uint32_t pad = 3 * n; pad < row_bytes; ++pad) b.push_back(0);
  }
  return b;
}

}  // namespace

std::string render_svg(const PlanningProblem& problem, const std::vector<LabeledPath>& paths,
                       const Raster* heatmap, double step) {
  const Scene& scene = problem.scene;
  if (scene.dim() != 2) fail(Errc::unsupported, "SVG rendering needs a 2D problem");
  if (!(step > 0.0)) fail(Errc::invalid_argument, "sampling step must be positive");
  const Bounds& b = scene.bounds();
  const double w = b.max[0] - b.min[0];
  const double h = b.max[1] - b.min[1];
  const double scale = 600.0 / std::max(w, h);
  auto sx = [&](double x) { return fmt((x - b.min[0]) * scale); };
  auto sy = [&](double y) { return fmt((b.max[1] - y) * scale); };
  auto len = [&](double v) { return fmt(v * scale); };

  static constexpr std::array<const char*, 6> kPalette = {"#2ca02c", "#9467bd", "#d62728",
                                                          "#1f77b4", "#ff7f0e", "#17becf"};
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << len(w) << "\" height=\"" << len(h)
      << "\" viewBox=\"0 0 " << len(w) << ' ' << len(h) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << len(w) << "\" height=\"" << len(h) << "\" fill=\"#ffffff\"/>\n";
  if (heatmap != nullptr) {
    const GridSpec& g = heatmap->grid;
    out << "<image x=\"" << sx(g.min[0]) << "\" y=\"" << sy(g.max[1]) << "\" width=\""
        << len(g.max[0] - g.min[0]) << "\" height=\"" << len(g.max[1] - g.min[1])
        << "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" href=\"data:image/bmp;base64,"
        << base64(heatmap_bmp(*heatmap)) << "\"/>\n";
  }
  for (const Obstacle& o : scene.obstacles()) {
    if (const auto* s = std::get_if<Sphere>(&o.shape())) {
      out << "<circle cx=\"" << sx(s->center[0]) << "\" cy=\"" << sy(s->center[1]) << "\" r=\""
          << len(s->radius) << "\" fill=\"#7f7f7f\" fill-opacity=\"0.6\" stroke=\"#333333\"/>\n";
    } else {
      const Box& bx = std::get<Box>(o.shape());
      out << "<rect x=\"" << sx(bx.center[0] - bx.half_extents[0]) << "\" y=\""
          << sy(bx.center[1] + bx.half_extents[1]) << "\" width=\"" << len(2 * bx.half_extents[0])
          << "\" height=\"" << len(2 * bx.half_extents[1])
          << "\" fill=\"#7f7f7f\" fill-opacity=\"0.6\" stroke=\"#333333\"/>\n";
    }
  }
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const SampleSet s = sample_path(paths[k].path, step);
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[k % kPalette.size()]
        << "\" stroke-width=\"2\"";
    if (k >= kPalette.size()) out << " stroke-dasharray=\"" << 4 + 2 * (k / kPalette.size()) << " 3\"";
    out << " points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      out << (i ? " " : "") << sx(s.points[i][0]) << ',' << sy(s.points[i][1]);
    }
    out << "\"><title>";
    for (char c : paths[k].label) {
      switch (c) {
        case '<': out << "&lt;"; break;
        case '>': out << "&gt;"; break;
        case '&': out << "&amp;"; break;
        default: out << c;
      }
    }
    out << "</title></polyline>\n";
  }
  out << "<circle cx=\"" << sx(problem.start[0]) << "\" cy=\"" << sy(problem.start[1])
      << "\" r=\"5\" fill=\"#000000\"/>\n";
  out << "<circle cx=\"" << sx(problem.goal[0]) << "\" cy=\"" << sy(problem.goal[1])
      << "\" r=\"5\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
  out << "</svg>\n";
  return out.str();
}

void write_svg(const std::string& svg, const std::string& path) { io::write_file(path, svg); }

}  // namespace upr
