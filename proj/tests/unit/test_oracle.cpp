#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "support.hpp"
#include "upr/error.hpp"
#include "upr/oracle.hpp"
#include "upr/scenegen.hpp"

using namespace upr;

namespace {

Bounds square(double e) {
  Bounds b;
  b.min = point(-e, -e);
  b.max = point(e, e);
  return b;
}

// Distance from p to segment a-b.
double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  double t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy);
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("grid geometry") {
    const GridSpec g{point(-5, -5), point(5, 5), 201};
    CHECK(g.cell(0) == doctest::Approx(0.05));
    CHECK(g.cell_diagonal() == doctest::Approx(0.05 * std::sqrt(2.0)));
    CHECK(g.at(0, 0)[0] == -5.0);
    CHECK(g.at(200, 200)[1] == 5.0);
    CHECK(g.at(100, 100)[0] == doctest::Approx(0.0));
  }

  TEST_CASE("empty scene: optimum on the start-goal segment") {
    const PlanningProblem prob{Scene(2, square(5.0)), point(-3, -1), point(4, 2)};
    const CostParams cp{0.01, 0.0};
    const GridSpec grid{point(-5, -5), point(5, 5), 101};
    const auto bf = brute_force_optimum(prob, cp, grid);
    const double straight = distance(prob.start, prob.goal);
    CHECK(bf.best_cost >= straight - 1e-9);
    CHECK(bf.best_cost <= straight + 1e-3);
    CHECK(segment_distance(bf.best_anchor, prob.start, prob.goal) <= grid.cell_diagonal());
    const Raster r = cost_heatmap(prob, cp, grid);
    CHECK(r.min == bf.best_cost);
    CHECK(r.values.size() == 101u * 101u);
  }

  TEST_CASE("calibration instance: detour beats the penalty") {
    const ProblemSample p = calibration_problem();
    const CostParams cp{0.01, 0.0};
    const GridSpec grid = grid_over(p.scene, 201);
    const auto smooth = brute_force_optimum(p.problem(), cp, grid);
    CHECK(smooth.best_cost < 6.0 + 2.0 * kPi);
    CHECK_FALSE(total_loss(p.scene, one_anchor_path(p.problem(), smooth.best_anchor), cp).collides);

    const auto exact = brute_force_optimum(p.problem(), cp, grid, CostFunction{CostKind::exact});
    CHECK(total_loss(p.scene, one_anchor_path(p.problem(), exact.best_anchor), cp).exact_collision == 0.0);
    // Colliding cells cost at least 6 + 2 pi, so every cell within the
    // minimum's value range is collision free.
    for (std::size_t i = 0; i < grid.resolution; i += 7) {
      for (std::size_t j = 0; j < grid.resolution; j += 7) {
        if (exact.raster.at(i, j) <= exact.best_cost + 1.0) {
          CHECK(total_loss(p.scene, one_anchor_path(p.problem(), grid.at(i, j)), cp).exact_collision == 0.0);
        }
      }
    }
  }

  TEST_CASE("raster matches a direct evaluation and has exact dimensions") {
    const ProblemSample p = calibration_problem();
    const CostParams cp{0.05, 0.0};
    const GridSpec grid{point(-4, -3), point(4, 3), 17};
    const Raster r = cost_heatmap(p.problem(), cp, grid);
    REQUIRE(r.values.size() == 17u * 17u);
    for (std::size_t i = 0; i < 17; i += 4) {
      for (std::size_t j = 0; j < 17; j += 3) {
        const auto b = total_loss(p.scene, one_anchor_path(p.problem(), grid.at(i, j)), cp);
        CHECK(r.at(i, j) == doctest::Approx(b.total_smooth).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("heatmap mirrors with the instance") {
    const CostParams cp{0.05, 0.0};
    auto flip = [](const Point& q) { return point(q[0], -q[1]); };
    for (const auto& p : gen_simple2d(3, 2)) {
      std::vector<Obstacle> flipped;
      for (const Obstacle& o : p.scene.obstacles()) {
        if (const auto* s = std::get_if<Sphere>(&o.shape())) {
          flipped.push_back(Obstacle::sphere(flip(s->center), s->radius));
        } else {
          const Box& b = std::get<Box>(o.shape());
          flipped.push_back(Obstacle::box(flip(b.center), b.half_extents));
        }
      }
      const PlanningProblem mirrored{Scene(2, p.scene.bounds(), flipped), flip(p.start), flip(p.goal)};
      const GridSpec grid = grid_over(p.scene, 41);
      for (const CostFunction fn : {CostFunction{CostKind::smooth}, CostFunction{CostKind::chomp, {2.0, 0.5}}}) {
        const Raster r = cost_heatmap(p.problem(), cp, grid, fn);
        const Raster m = cost_heatmap(mirrored, cp, grid, fn);
        for (std::size_t i = 0; i < 41; ++i) {
          for (std::size_t j = 0; j < 41; ++j) {
            REQUIRE(std::abs(r.at(i, j) - m.at(i, 40 - j)) <= 1e-9);
          }
        }
      }
    }
    // A symmetric instance is its own mirror.
    const ProblemSample c = calibration_problem();
    const Raster r = cost_heatmap(c.problem(), cp, grid_over(c.scene, 41));
    for (std::size_t i = 0; i < 41; ++i) {
      for (std::size_t j = 0; j < 41; ++j) REQUIRE(std::abs(r.at(i, j) - r.at(i, 40 - j)) <= 1e-9);
    }
  }

  TEST_CASE("ours and CHOMP rasters differ inside the penalty region") {
    const ProblemSample p = calibration_problem();
    const CostParams cp{0.05, 0.0};
    const GridSpec grid = grid_over(p.scene, 21);
    const Raster ours = cost_heatmap(p.problem(), cp, grid);
    const Raster chomp = cost_heatmap(p.problem(), cp, grid, CostFunction{CostKind::chomp, {1.0, 1.0}});
    // Anchor at the origin: path through the sphere.
    CHECK(std::abs(ours.at(10, 10) - chomp.at(10, 10)) > 1e-3);
  }

  TEST_CASE("ties resolve to the smallest cell") {
    // Start equal to goal: the cost depends only on distance from the anchor
    // to the start, so mirrored cells tie and the lowest (i, j) wins.
    const PlanningProblem prob{Scene(2, square(2.0)), point(0, 0), point(0, 0)};
    const GridSpec grid{point(-1, -1), point(1, 1), 2};
    const auto bf = brute_force_optimum(prob, CostParams{0.1, 0.0}, grid);
    CHECK(bf.best_i == 0);
    CHECK(bf.best_j == 0);
  }

  TEST_CASE("unsupported and invalid instances") {
    const PlanningProblem p3{Scene(3, [] {
                               Bounds b;
                               b.min = point(-1, -1, -1);
                               b.max = point(1, 1, 1);
                               return b;
                             }()),
                             point(0, 0, 0), point(1, 1, 1)};
    try {
      (void)brute_force_optimum(p3, CostParams{}, GridSpec{point(-1, -1), point(1, 1), 5});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unsupported);
    }
    const ProblemSample p = calibration_problem();
    CHECK_THROWS_AS(cost_heatmap(p.problem(), CostParams{}, GridSpec{point(-6, -5), point(5, 5), 5}), Error);
    CHECK_THROWS_AS(cost_heatmap(p.problem(), CostParams{}, GridSpec{point(-5, -5), point(5, 5), 1}), Error);
  }

  TEST_CASE("property verifier on generated instances") {
    const auto set = gen_simple2d(0, 4);
    for (const auto& p : set) {
      const CostParams cp{0.01, 0.0};
      const auto opt = brute_force_optimum(p.problem(), cp, grid_over(p.scene, 101),
                                           CostFunction{CostKind::exact});
      const PropertyReport rep = verify_properties(p.problem(), cp, opt, 300, 7);
      CHECK(rep.trials == 300);
      CHECK(rep.mp_violations == 0);
      CHECK(rep.np_violations == 0);
      CHECK(rep.gp_violations == 0);
      CHECK(rep.optimum_exact == 0.0);
      CHECK(rep.worst_gp_margin <= rep.gp_slack);
    }
  }

  TEST_CASE("NP on a path with one interior sample") {
    const ProblemSample p = calibration_problem();
    const CostParams cp{0.5, 0.0};  // samples at u = 0, 0.5, 1
    for (double y : {-1.5, -0.5, 0.0, 0.4, 2.5}) {
      const SplinePath path = one_anchor_path(p.problem(), point(0, y));
      const SampleSet s = sample_path(path, cp.step);
      REQUIRE(s.points.size() == 3);
      const bool inside = testing::strictly_inside(p.scene.obstacles()[0], s.points[1]);
      CHECK((exact_collision_cost(p.scene, s) > 0.0) == inside);
    }
  }

  TEST_CASE("oracle agreement with the optimizer on generated instances") {
    const auto set = gen_simple2d(1, 3);
    const FamilyDefaults d = family_defaults(SceneFamily::simple2d);
    for (const auto& p : set) {
      const auto bf = brute_force_optimum(p.problem(), d.cost, grid_over(p.scene, 201));
      const double slack = local_slack(p.problem(), d.cost, bf);
      const PlanResult r = optimize_path(p.problem(), d.cost, d.optimizer);
      CHECK(r.breakdown.total_smooth <= bf.best_cost + slack);
      CHECK(r.success);
    }
  }

  TEST_CASE("PGM output") {
    const ProblemSample p = calibration_problem();
    const Raster r = cost_heatmap(p.problem(), CostParams{0.05, 0.0}, grid_over(p.scene, 9));
    const std::string path = "oracle_test.pgm";
    write_pgm(r, path);
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    CHECK(magic == "P5");
    CHECK(w == 9);
    CHECK(h == 9);
    CHECK(maxval == 255);
    in.get();
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.size() == 81);
    std::remove(path.c_str());
    CHECK_THROWS_AS(write_pgm(r, "/nonexistent-dir/x.pgm"), Error);
  }
}
