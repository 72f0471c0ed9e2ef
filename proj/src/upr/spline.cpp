#include "upr/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "upr/error.hpp"

namespace upr {
namespace {

// Index k with knots[k] <= u < knots[k+1]; the right end maps to the last
// non-empty span.
std::size_t find_span(std::span<const double> knots, int degree, std::size_t count,
                      double u) {
  const std::size_t p = static_cast<std::size_t>(degree);
  if (u >= knots[count]) return count - 1;
  std::size_t lo = p;
  std::size_t hi = count;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (u < knots[mid]) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

// The degree + 1 basis values that can be non-zero at u, N_{span-p..span}.
void nonzero_basis(std::span<const double> knots, int degree, std::size_t span, double u,
                   double* out) {
  const std::size_t p = static_cast<std::size_t>(degree);
  std::vector<double> left(p + 1, 0.0);
  std::vector<double> right(p + 1, 0.0);
  out[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = u - knots[span + 1 - j];
    right[j] = knots[span + j] - u;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : out[r] / denom;
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

void check_shape(std::size_t anchors, int degree) {
  if (degree < 1) fail(Errc::invalid_argument, "spline degree must be at least 1");
  if (anchors < 1) fail(Errc::invalid_argument, "spline needs at least one anchor");
  if (anchors + 2 < static_cast<std::size_t>(degree) + 1) {
    fail(Errc::invalid_argument, "too few control points for degree " +
                                     std::to_string(degree));
  }
}

}  // namespace

double parameter_domain(std::size_t anchors, int degree) {
  check_shape(anchors, degree);
  const auto n = static_cast<long>(anchors);
  const long p = degree;
  return static_cast<double>(n > p ? n - p : n + 2 - p);
}

double SplinePath::domain_max() const { return parameter_domain(anchors.size(), degree); }

std::vector<Point> SplinePath::controls() const {
  std::vector<Point> out;
  out.reserve(anchors.size() + 2);
  out.push_back(start);
  out.insert(out.end(), anchors.begin(), anchors.end());
  out.push_back(goal);
  return out;
}

std::vector<double> SplinePath::effective_weights() const {
  std::vector<double> out;
  out.reserve(weights.size() + 2);
  out.push_back(1.0);
  for (double w : weights) out.push_back(std::clamp(w, kMinWeight, 1.0));
  out.push_back(1.0);
  return out;
}

void SplinePath::validate() const {
  check_shape(anchors.size(), degree);
  if (start.dim != goal.dim) fail(Errc::invalid_argument, "start and goal differ in dimension");
  if (start.dim != 2 && start.dim != 3) fail(Errc::invalid_argument, "path dimension must be 2 or 3");
  if (weights.size() != anchors.size()) {
    fail(Errc::invalid_argument, "one weight per anchor required");
  }
  for (const Point& a : anchors) {
    if (a.dim != start.dim) fail(Errc::invalid_argument, "anchor dimension mismatch");
    for (int i = 0; i < a.dim; ++i) {
      if (!std::isfinite(a[i])) fail(Errc::invalid_argument, "non-finite anchor coordinate");
    }
  }
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) fail(Errc::invalid_argument, "weights must lie in [0, 1]");
  }
}

std::vector<double> open_uniform_knots(std::size_t count, int degree, double domain_max) {
  if (degree < 1) fail(Errc::invalid_argument, "spline degree must be at least 1");
  const std::size_t p = static_cast<std::size_t>(degree);
  if (count <= p) {
    fail(Errc::invalid_argument, "control count must exceed the degree");
  }
  if (!(domain_max > 0.0)) fail(Errc::invalid_argument, "knot domain must be positive");
  std::vector<double> knots(count + p + 1, 0.0);
  const std::size_t spans = count - p;
  for (std::size_t j = 1; j < spans; ++j) {
    knots[p + j] = domain_max * static_cast<double>(j) / static_cast<double>(spans);
  }
  std::fill(knots.begin() + static_cast<std::ptrdiff_t>(count), knots.end(), domain_max);
  return knots;
}

std::vector<double> basis_functions(std::span<const double> knots, int degree,
                                    std::size_t count, double u) {
  const std::size_t p = static_cast<std::size_t>(degree);
  if (knots.size() != count + p + 1) fail(Errc::invalid_argument, "knot vector length mismatch");
  std::vector<double> out(count, 0.0);
  const std::size_t span = find_span(knots, degree, count, u);
  std::vector<double> local(p + 1);
  nonzero_basis(knots, degree, span, u, local.data());
  for (std::size_t j = 0; j <= p; ++j) out[span - p + j] = local[j];
  return out;
}

Point nurbs_eval(const SplinePath& path, double u) {
  path.validate();
  const double dmax = path.domain_max();
  if (!(u >= 0.0 && u <= dmax)) {
    fail(Errc::domain, "parameter " + std::to_string(u) + " outside [0, " +
                           std::to_string(dmax) + "]");
  }
  const std::vector<Point> controls = path.controls();
  const std::vector<double> weights = path.effective_weights();
  const std::vector<double> knots = open_uniform_knots(controls.size(), path.degree, dmax);
  const std::vector<double> basis = basis_functions(knots, path.degree, controls.size(), u);

  Point num;
  num.dim = path.dim();
  double denom = 0.0;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const double bw = basis[i] * weights[i];
    denom += bw;
    for (int d = 0; d < num.dim; ++d) num[d] += bw * controls[i][d];
  }
  for (int d = 0; d < num.dim; ++d) num[d] /= denom;
  return num;
}

std::vector<double> sample_parameters(double domain_max, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    fail(Errc::invalid_argument, "sampling step must be positive");
  }
  const auto last = static_cast<std::size_t>(std::floor(domain_max / step + 1e-9));
  std::vector<double> out;
  out.reserve(last + 2);
  for (std::size_t k = 0; k <= last; ++k) out.push_back(static_cast<double>(k) * step);
  if (std::abs(out.back() - domain_max) <= 1e-9 * std::max(1.0, domain_max)) {
    out.back() = domain_max;
  } else {
    out.push_back(domain_max);
  }
  return out;
}

SampleSet sample_path(const SplinePath& path, double step) {
  path.validate();
  return SampleBasis(path.anchor_count(), path.degree, step).sample(path);
}

SplinePath straight_line_spline(const Point& start, const Point& goal, std::size_t anchors,
                                int degree) {
  check_shape(anchors, degree);
  if (start.dim != goal.dim) fail(Errc::invalid_argument, "start and goal differ in dimension");
  SplinePath path;
  path.degree = degree;
  path.start = start;
  path.goal = goal;
  path.weights.assign(anchors, 1.0);
  for (std::size_t k = 1; k <= anchors; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(anchors + 1);
    Point a;
    a.dim = start.dim;
    for (int d = 0; d < a.dim; ++d) a[d] = start[d] + t * (goal[d] - start[d]);
    path.anchors.push_back(a);
  }
  return path;
}

SampleBasis::SampleBasis(std::size_t anchors, int degree, double step)
    : anchors_(anchors), degree_(degree), step_(step) {
  const double dmax = parameter_domain(anchors, degree);
  parameters_ = sample_parameters(dmax, step);
  const std::size_t count = anchors + 2;
  const std::size_t width = static_cast<std::size_t>(degree) + 1;
  const std::vector<double> knots = open_uniform_knots(count, degree, dmax);
  first_.resize(parameters_.size());
  values_.resize(parameters_.size() * width);
  for (std::size_t s = 0; s < parameters_.size(); ++s) {
    const std::size_t span = find_span(knots, degree, count, parameters_[s]);
    first_[s] = span - static_cast<std::size_t>(degree);
    nonzero_basis(knots, degree, span, parameters_[s], &values_[s * width]);
  }
}

SampleSet SampleBasis::sample(const SplinePath& path) const {
  if (path.anchor_count() != anchors_ || path.degree != degree_) {
    fail(Errc::invalid_argument, "path shape differs from the precomputed basis");
  }
  const std::vector<Point> controls = path.controls();
  const std::vector<double> weights = path.effective_weights();
  SampleSet set;
  set.step = step_;
  set.parameters = parameters_;
  set.points = evaluate<double>(controls, weights);
  return set;
}

}  // namespace upr
