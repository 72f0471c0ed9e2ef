#include <doctest.h>

#include "support.hpp"
#include "upr/error.hpp"
#include "upr/spline.hpp"

using namespace upr;

namespace {

bool close(const Point& a, const Point& b, double tol) { return distance(a, b) <= tol; }

double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain, counter-clockwise.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(),
            [](const Point& a, const Point& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool in_hull(const std::vector<Point>& hull, const Point& p, double tol) {
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point& a = hull[i];
    const Point& b = hull[(i + 1) % hull.size()];
    const double len = distance(a, b);
    if (cross(a, b, p) < -tol * std::max(1.0, len)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("spline") {
  TEST_CASE("open uniform knots") {
    CHECK(open_uniform_knots(3, 2, 1.0) == std::vector<double>{0, 0, 0, 1, 1, 1});
    CHECK(open_uniform_knots(4, 2, 2.0) == std::vector<double>{0, 0, 0, 1, 2, 2, 2});
    CHECK(open_uniform_knots(5, 1, 4.0) == std::vector<double>{0, 0, 1, 2, 3, 4, 4});
    CHECK_THROWS_AS(open_uniform_knots(2, 2, 1.0), Error);
  }

  TEST_CASE("parameter domain") {
    CHECK(parameter_domain(10, 2) == 8.0);
    CHECK(parameter_domain(3, 2) == 1.0);
    CHECK(parameter_domain(1, 2) == 1.0);  // single anchor: one quadratic span
    CHECK(parameter_domain(1, 1) == 2.0);  // single anchor: two linear spans
    CHECK_THROWS_AS(parameter_domain(1, 4), Error);
    CHECK_THROWS_AS(parameter_domain(0, 1), Error);
  }

  TEST_CASE("nurbs_eval examples") {
    SplinePath straight = straight_line_spline(point(0, 0), point(2, 0), 3, 2);
    CHECK(close(nurbs_eval(straight, 0.0), point(0, 0), 1e-15));

    SplinePath linear;
    linear.degree = 1;
    linear.start = point(0, 0);
    linear.goal = point(2, 0);
    linear.anchors = {point(1, 1)};
    linear.weights = {1.0};
    CHECK(close(nurbs_eval(linear, 0.5), point(0.5, 0.5), 1e-15));

    SplinePath bezier;
    bezier.degree = 2;
    bezier.start = point(0, 0);
    bezier.goal = point(2, 0);
    bezier.anchors = {point(1, 0)};
    bezier.weights = {1.0};
    CHECK(close(nurbs_eval(bezier, 0.5 * bezier.domain_max()), point(1, 0), 1e-15));

    CHECK_THROWS_AS(nurbs_eval(bezier, -0.01), Error);
    CHECK_THROWS_AS(nurbs_eval(bezier, 1.01), Error);
    try {
      nurbs_eval(bezier, 2.0);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::domain);
    }
  }

  TEST_CASE("sample_path parameter sets") {
    SplinePath ten = straight_line_spline(point(0, 0, 0), point(20, 20, 20), 10, 2);
    SampleSet s = sample_path(ten, 0.05);
    CHECK(s.parameters.size() == 161);
    CHECK(s.parameters.front() == 0.0);
    CHECK(s.parameters.back() == 8.0);

    SplinePath three = straight_line_spline(point(0, 0), point(1, 1), 3, 2);
    CHECK(sample_path(three, 0.5).parameters == std::vector<double>{0.0, 0.5, 1.0});
    const auto p = sample_path(three, 0.4).parameters;
    REQUIRE(p.size() == 4);
    CHECK(p[1] == doctest::Approx(0.4));
    CHECK(p[2] == doctest::Approx(0.8));
    CHECK(p[3] == 1.0);
    CHECK_THROWS_AS(sample_path(three, 0.0), Error);
    CHECK_THROWS_AS(sample_path(three, -1.0), Error);

    for (std::size_t i = 0; i < s.points.size(); ++i) {
      CHECK(close(s.points[i], nurbs_eval(ten, s.parameters[i]), 1e-12));
    }
  }

  TEST_CASE("straight line spline") {
    SplinePath path = straight_line_spline(point(0, 0), point(3, 4), 3, 2);
    CHECK(close(path.anchors[0], point(0.75, 1), 1e-15));
    CHECK(close(path.anchors[1], point(1.5, 2), 1e-15));
    CHECK(close(path.anchors[2], point(2.25, 3), 1e-15));
    const SampleSet s = sample_path(path, 0.01);
    double len = 0.0;
    for (std::size_t i = 1; i < s.points.size(); ++i) len += distance(s.points[i], s.points[i - 1]);
    CHECK(std::abs(len - 5.0) <= 1e-9);

    SplinePath degenerate = straight_line_spline(point(1, 1), point(1, 1), 3, 2);
    for (const Point& a : degenerate.anchors) CHECK(close(a, point(1, 1), 0.0));

    SplinePath wide = straight_line_spline(point(0, 0, 0), point(20, 20, 20), 10, 2);
    CHECK(wide.anchors.size() == 10);
    for (const Point& a : wide.anchors) {
      CHECK(a[0] == doctest::Approx(a[1]));
      CHECK(a[1] == doctest::Approx(a[2]));
    }
  }

  TEST_CASE("validation") {
    SplinePath path = straight_line_spline(point(0, 0), point(3, 4), 3, 2);
    path.weights[0] = 1.5;
    CHECK_THROWS_AS(path.validate(), Error);
    path.weights[0] = 0.0;  // allowed, clamped on evaluation
    CHECK_NOTHROW(path.validate());
    CHECK(path.effective_weights()[1] == kMinWeight);
    path.weights.pop_back();
    CHECK_THROWS_AS(path.validate(), Error);
  }

  TEST_CASE("basis agrees with the recursive definition and sums to one") {
    std::mt19937_64 rng(5);
    for (int degree = 1; degree <= 4; ++degree) {
      for (std::size_t count = degree + 1; count < 12; ++count) {
        const double dmax = 1.0 + static_cast<double>(count);
        const auto knots = open_uniform_knots(count, degree, dmax);
        for (int k = 0; k < 50; ++k) {
          const double u = k == 0 ? dmax : testing::uniform(rng, 0.0, dmax);
          const auto basis = basis_functions(knots, degree, count, u);
          double sum = 0.0;
          for (std::size_t i = 0; i < count; ++i) {
            REQUIRE(std::abs(basis[i] - testing::recursive_basis(knots, static_cast<int>(i), degree, u)) <=
                    1e-12);
            sum += basis[i];
          }
          REQUIRE(std::abs(sum - 1.0) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("single anchor quadratic equals the rational Bezier closed form") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      SplinePath path = testing::random_path(rng, 2, 1, 2, -5, 5);
      const double w = path.weights[0];
      for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
        const double b0 = (1 - t) * (1 - t), b1 = 2 * t * (1 - t) * w, b2 = t * t;
        const double den = b0 + b1 + b2;
        Point expected = point(
            (b0 * path.start[0] + b1 * path.anchors[0][0] + b2 * path.goal[0]) / den,
            (b0 * path.start[1] + b1 * path.anchors[0][1] + b2 * path.goal[1]) / den);
        REQUIRE(close(nurbs_eval(path, t), expected, 1e-12));
      }
    }
  }

  TEST_CASE("endpoint interpolation on random paths") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
      const int dim = 2 + trial % 2;
      const int degree = 1 + trial % 3;
      const std::size_t anchors = static_cast<std::size_t>(degree) + 1 + trial % 5;
      const SplinePath path = testing::random_path(rng, dim, anchors, degree, -10, 10);
      REQUIRE(distance(nurbs_eval(path, 0.0), path.start) <= 1e-12);
      REQUIRE(distance(nurbs_eval(path, path.domain_max()), path.goal) <= 1e-12);
    }
  }

  TEST_CASE("samples stay inside the control polygon's convex hull") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 300; ++trial) {
      const int degree = 1 + trial % 3;
      const std::size_t anchors = static_cast<std::size_t>(degree) + 1 + trial % 4;
      const SplinePath path = testing::random_path(rng, 2, anchors, degree, -5, 5);
      const auto hull = convex_hull(path.controls());
      for (const Point& p : sample_path(path, 0.05).points) REQUIRE(in_hull(hull, p, 1e-9));
    }
  }

  TEST_CASE("affine maps commute with evaluation") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 300; ++trial) {
      const SplinePath path = testing::random_path(rng, 2, 4, 2, -5, 5);
      const double a = testing::uniform(rng, -2, 2), b = testing::uniform(rng, -2, 2);
      const double c = testing::uniform(rng, -2, 2), d = testing::uniform(rng, -2, 2);
      const double tx = testing::uniform(rng, -3, 3), ty = testing::uniform(rng, -3, 3);
      auto map = [&](const Point& p) { return point(a * p[0] + b * p[1] + tx, c * p[0] + d * p[1] + ty); };
      SplinePath mapped = path;
      mapped.start = map(path.start);
      mapped.goal = map(path.goal);
      for (auto& q : mapped.anchors) q = map(q);
      for (double u = 0.0; u <= path.domain_max(); u += 0.1) {
        REQUIRE(close(map(nurbs_eval(path, u)), nurbs_eval(mapped, u), 1e-9));
      }
    }
  }

  TEST_CASE("rational basis is a partition of unity") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 200; ++trial) {
      const SplinePath path = testing::random_path(rng, 2, 6, 3, -5, 5);
      const auto weights = path.effective_weights();
      const auto knots = open_uniform_knots(8, 3, path.domain_max());
      for (double u : sample_parameters(path.domain_max(), 0.05)) {
        const auto basis = basis_functions(knots, 3, 8, u);
        double den = 0.0;
        for (std::size_t i = 0; i < 8; ++i) den += basis[i] * weights[i];
        double sum = 0.0;
        for (std::size_t i = 0; i < 8; ++i) sum += basis[i] * weights[i] / den;
        REQUIRE(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }

  TEST_CASE("equal weights reduce to the non-rational B-spline") {
    std::mt19937_64 rng(66);
    for (int trial = 0; trial < 100; ++trial) {
      const SplinePath unit = testing::random_path(rng, 3, 5, 2, -5, 5, false);
      const auto controls = unit.controls();
      const auto knots = open_uniform_knots(controls.size(), 2, unit.domain_max());
      for (double u = 0.0; u <= unit.domain_max(); u += 0.25) {
        Point expected;
        expected.dim = 3;
        for (std::size_t i = 0; i < controls.size(); ++i) {
          const double n = testing::recursive_basis(knots, static_cast<int>(i), 2, u);
          for (int d = 0; d < 3; ++d) expected[d] += n * controls[i][d];
        }
        REQUIRE(close(nurbs_eval(unit, u), expected, 1e-12));
      }
    }
  }
}
