#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include "upr/error.hpp"
#include "upr/harness.hpp"

using namespace upr;

namespace {

BenchmarkConfig small_config() {
  BenchmarkConfig c = BenchmarkConfig::defaults(SceneFamily::simple2d);
  c.problems = 3;
  c.seed = 11;
  c.methods = {Method::ours_direct, Method::chomp_uncalibrated};
  c.grid_resolution = 41;
  c.optimizer.restarts = 1;
  c.optimizer.max_iterations = 300;
  return c;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("standard calibration grid") {
    const CalibrationGrid g = CalibrationGrid::standard();
    REQUIRE(g.lambdas.size() == 11);
    CHECK(g.lambdas.front() == doctest::Approx(0.1));
    CHECK(g.lambdas.back() == doctest::Approx(102.4));
    CHECK(g.epsilons == std::vector<double>{0.05, 0.1, 0.2, 0.5, 1.0});
  }

  TEST_CASE("calibration rejects a zero penalty") {
    const ProblemSample p = calibration_problem();
    CalibrationGrid only_zero{{0.0}, {0.5}};
    try {
      (void)calibrate_chomp(p, CostParams{0.01, 0.0}, only_zero, 61);
      FAIL("expected a calibration error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::calibration);
    }

    CalibrationGrid with_zero{{0.0, 0.1, 1.0}, {0.05, 0.5}};
    const CalibrationResult r = calibrate_chomp(p, CostParams{0.01, 0.0}, with_zero, 61);
    REQUIRE(r.candidates.size() == 6);
    // Without a penalty the optimum is the straight line through the sphere.
    CHECK_FALSE(r.candidates[0].collision_free);
    CHECK(r.candidates[0].length == doctest::Approx(6.0).epsilon(1e-3));
    CHECK(r.params.lambda > 0.0);
    CHECK(r.length <= 1.02 * r.reference_length);
    CHECK(r.length >= 0.98 * r.reference_length);
    CHECK(r.reference_length > 6.0);

    CHECK_THROWS_AS(calibrate_chomp(p, CostParams{0.01, 0.0}, CalibrationGrid{{-1.0}, {0.5}}, 61), Error);
  }

  TEST_CASE("method names round trip") {
    for (Method m : {Method::ours_direct, Method::chomp_calibrated, Method::chomp_uncalibrated,
                     Method::ours_network, Method::ours_network_refine}) {
      CHECK(parse_method(method_name(m)) == m);
    }
    CHECK_THROWS_AS(parse_method("rrt"), Error);
  }

  TEST_CASE("config validation and hashing") {
    BenchmarkConfig c = small_config();
    const std::string h = config_hash(c);
    CHECK(h.size() == 16);
    CHECK(config_hash(c) == h);
    CHECK(config_hash(benchmark_config_from_json(to_json(c))) == h);
    c.workers = 4;  // execution detail, not part of the experiment
    CHECK(config_hash(c) == h);
    c.seed = 12;
    CHECK(config_hash(c) != h);

    BenchmarkConfig empty = small_config();
    empty.methods.clear();
    try {
      validate(empty);
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config);
    }
    BenchmarkConfig no_net = small_config();
    no_net.methods = {Method::ours_network};
    CHECK_THROWS_AS(run_benchmark(no_net), Error);
  }

  TEST_CASE("small benchmark is consistent and deterministic") {
    const BenchmarkConfig c = small_config();
    const BenchmarkReport a = run_benchmark(c);
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0].method == "ours-direct");
    CHECK(a.rows[1].method == "chomp-uncalibrated");
    REQUIRE(a.records.size() == 6);
    for (const MethodRow& row : a.rows) {
      std::size_t successes = 0;
      for (const ProblemRecord& r : a.records) {
        if (r.method != row.method) continue;
        CHECK(r.error.empty());
        CHECK(r.success == (r.exact_collision == 0.0));
        if (r.success) {
          ++successes;
          CHECK(r.length_ratio >= 1.0);
        }
      }
      CHECK(row.successes == successes);
      CHECK(row.success_rate == doctest::Approx(static_cast<double>(successes) / 3.0));
    }
    CHECK(a.config_hash == config_hash(c));

    BenchmarkConfig parallel = c;
    parallel.workers = 2;
    const BenchmarkReport b = run_benchmark(parallel);
    CHECK(report_json(a, false).dump() == report_json(b, false).dump());
    CHECK(report_json(a, true).dump().find("wall_ms") != std::string::npos);
    CHECK(report_json(a, false).dump().find("wall_ms") == std::string::npos);

    const std::string csv = records_csv(a);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,problem_id,success,length,length_ratio,wall_ms,seed");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      CHECK(std::count(line.begin(), line.end(), ',') == 6);
      ++rows;
    }
    CHECK(rows == 6);

    const auto dir = std::filesystem::temp_directory_path() / "upr_harness_test";
    std::filesystem::create_directories(dir);
    write_report(a, dir.string());
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "records.csv"));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("calibrated method records its parameters") {
    BenchmarkConfig c = small_config();
    c.problems = 1;
    c.methods = {Method::chomp_calibrated};
    const BenchmarkReport r = run_benchmark(c);
    REQUIRE(r.calibration.has_value());
    const io::json j = report_json(r, false);
    CHECK(j.dump().find("calibration") != std::string::npos);
  }

  TEST_CASE("failing method becomes a failed record") {
    BenchmarkConfig c = small_config();
    c.problems = 2;
    c.methods = {Method::ours_network};
    c.checkpoint = "/nonexistent/checkpoint.json";
    // Loading happens once up front; a missing checkpoint is a run error.
    CHECK_THROWS_AS(run_benchmark(c), Error);
    const MlpNet net3d(train_defaults(SceneFamily::boxworld3d).net);
    CHECK_THROWS_AS(run_benchmark(c, &net3d), Error);

    // A network with room for one obstacle fails on each two-obstacle scene.
    NetConfig small = train_defaults(SceneFamily::simple2d).net;
    small.k_max = 1;
    const MlpNet net(small);
    const BenchmarkReport r = run_benchmark(c, &net);
    REQUIRE(r.records.size() == 2);
    for (const ProblemRecord& rec : r.records) {
      CHECK_FALSE(rec.success);
      CHECK_FALSE(rec.error.empty());
    }
    CHECK(r.rows[0].success_rate == 0.0);
  }

  TEST_CASE("property and gradient suites at small size") {
    const PropertySuiteReport p = run_property_suite(3, 2, 50, 61);
    CHECK(p.instances == 2);
    CHECK(p.reports.size() == 2);
    CHECK(p.mp_violations + p.np_violations + p.gp_violations == 0);
    CHECK(to_json(p).at("instances") == 2);

    const GradcheckSuiteReport g = run_gradcheck_suite(5, 4, 1);
    CHECK(g.cost_configurations == 4);
    CHECK(g.cost_max_rel_error < 1e-4);
    CHECK(g.net_checked > 0);
    CHECK(g.net_max_rel_error < 1e-3);
  }

  TEST_CASE("svg rendering") {
    const ProblemSample p = gen_simple2d(4, 1)[0];
    const std::vector<LabeledPath> paths{
        {"straight", straight_line_spline(p.start, p.goal, 1, 2)},
        {"detour", one_anchor_path(p.problem(), Point{0.0, 4.5})},
    };
    const Raster heat = cost_heatmap(p.problem(), CostParams{0.05, 0.0}, grid_over(p.scene, 21));
    const std::string svg = render_svg(p.problem(), paths, &heat);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(count_of(svg, "<polyline") == 2);
    CHECK(count_of(svg, "<image") == 1);
    CHECK(count_of(svg, "<circle") >= 1);
    CHECK(count_of(svg, "<rect") >= 1);
    CHECK(svg.find("<title>detour</title>") != std::string::npos);

    // Distinct strokes per path.
    std::set<std::string> strokes;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
      const auto s = svg.find("stroke=\"", pos);
      strokes.insert(svg.substr(s, svg.find('"', s + 8) - s));
    }
    CHECK(strokes.size() == 2);

    const ProblemSample world = gen_boxworld3d(1, 1)[0];
    try {
      (void)render_svg(world.problem(), {});
      FAIL("expected unsupported");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unsupported);
    }
  }
}
