#include "upr/regressor.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "upr/error.hpp"

namespace upr {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;
using ad::Var;

constexpr int kCheckpointVersion = 1;
// Gain of each head's last layer relative to fan-in scaling.
constexpr double kHeadGain = 0.1;

// FNV-1a over 64-bit words.
struct Signature {
  std::uint64_t h = 1469598103934665603ull;
  void mix(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
};

double logistic_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Weight in (kMinWeight, 1); smooth, so saturation never zeroes the gradient
// outright.
double squash_weight(double raw) { return kMinWeight + (1.0 - kMinWeight) * logistic_value(raw); }

// Which smooth piece of the obstacle's SDF a point falls in.
std::uint64_t sdf_region(const Obstacle& o, const Point& x) {
  if (o.is_sphere()) return 0;
  const Box& b = std::get<Box>(o.shape());
  std::uint64_t code = 0;
  int argmax = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.dim; ++i) {
    const double q = std::abs(x[i] - b.center[i]) - b.half_extents[i];
    if (q > 0.0) code |= 1u << i;
    if (x[i] < b.center[i]) code |= 1u << (i + 3);
    if (q > best) {
      best = q;
      argmax = i;
    }
  }
  return code | (static_cast<std::uint64_t>(argmax) << 8);
}

struct SampleGrad {
  double value = 0.0;
  bool collision_free = true;
  std::vector<double> d_anchor;
  std::vector<double> d_weight;
};

SampleGrad path_loss(const Scene& scene, const SampleBasis& basis, const SplinePath& path,
                     double delta, bool need_grad, Signature& sig) {
  const std::size_t n = path.anchors.size();
  const int dim = scene.dim();
  ad::Tape tape;
  std::vector<BasicPoint<Var>> controls(n + 2);
  std::vector<Var> weights(n + 2, Var(1.0));
  std::vector<Var> coords;
  coords.reserve(n * static_cast<std::size_t>(dim));
  for (auto& c : controls) c.dim = dim;
  for (int i = 0; i < dim; ++i) {
    controls.front()[i] = path.start[i];
    controls.back()[i] = path.goal[i];
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (int i = 0; i < dim; ++i) {
      coords.push_back(tape.variable(path.anchors[k][i]));
      controls[k + 1][i] = coords.back();
    }
    weights[k + 1] = tape.variable(path.weights[k]);
  }
  const auto points = basis.evaluate<Var>(controls, std::span<const Var>(weights));
  std::vector<Point> plain(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) plain[i] = values_of(points[i]);
  const SampleLabels labels = label_samples(scene, plain);
  const Var total = polyline_length<Var>(points) + smooth_collision<Var>(scene, points, labels, delta);

  SampleGrad out;
  out.value = total.value();
  for (std::size_t i = 0; i < plain.size(); ++i) {
    const bool hit = labels.colliding(i);
    out.collision_free = out.collision_free && !hit;
    sig.mix(labels.selected[i] * 2 + (hit ? 1 : 0));
    sig.mix(sdf_region(scene.obstacles()[labels.selected[i]], plain[i]));
    if (hit) sig.mix(std::abs(labels.min_sdf[i] - delta) > 50.0 ? 1 : 0);
  }
  if (need_grad) {
    out.d_anchor.assign(coords.size(), 0.0);
    out.d_weight.assign(n, 0.0);
    if (!total.is_constant()) {
      const std::vector<double> adj = tape.adjoints(total);
      for (std::size_t i = 0; i < coords.size(); ++i) out.d_anchor[i] = adj[coords[i].index()];
      for (std::size_t k = 0; k < n; ++k) out.d_weight[k] = adj[weights[k + 1].index()];
    }
  }
  return out;
}

void relu_inplace(Mat& m) { m = m.cwiseMax(0.0); }

void mix_signs(Signature& sig, const Mat& pre) {
  std::uint64_t word = 0;
  int bits = 0;
  for (Index i = 0; i < pre.size(); ++i) {
    word = (word << 1) | (pre.data()[i] > 0.0 ? 1u : 0u);
    if (++bits == 64) {
      sig.mix(word);
      word = 0;
      bits = 0;
    }
  }
  if (bits > 0) sig.mix(word);
}

}  // namespace

std::size_t descriptor_features(int dim) { return 1 + 2 * static_cast<std::size_t>(dim); }

std::vector<double> normalize_point(const Scene& scene, const Point& p) {
  const Bounds& b = scene.bounds();
  std::vector<double> out(static_cast<std::size_t>(p.dim));
  for (int i = 0; i < p.dim; ++i) {
    const double half = 0.5 * (b.max[i] - b.min[i]);
    out[static_cast<std::size_t>(i)] = (p[i] - 0.5 * (b.max[i] + b.min[i])) / half;
  }
  return out;
}

std::vector<double> vectorize_scene(const Scene& scene, std::size_t k_max) {
  const std::size_t n = scene.obstacles().size();
  if (n > k_max) {
    fail(Errc::capacity, "scene has " + std::to_string(n) + " obstacles, descriptor holds " +
                             std::to_string(k_max));
  }
  const int dim = scene.dim();
  const std::size_t f = descriptor_features(dim);
  std::vector<double> out(k_max * f, 0.0);
  const Bounds& b = scene.bounds();
  for (std::size_t k = 0; k < n; ++k) {
    const Obstacle& o = scene.obstacles()[k];
    double* row = &out[k * f];
    row[0] = o.is_sphere() ? 1.0 : 2.0;
    const std::vector<double> c = normalize_point(scene, o.center());
    for (int i = 0; i < dim; ++i) {
      const double half = 0.5 * (b.max[i] - b.min[i]);
      row[1 + i] = c[static_cast<std::size_t>(i)];
      if (const auto* s = std::get_if<Sphere>(&o.shape())) {
        if (i == 0) row[1 + dim] = s->radius / half;
      } else {
        row[1 + dim + i] = std::get<Box>(o.shape()).half_extents[i] / half;
      }
    }
  }
  return out;
}

std::size_t NetConfig::input_size() const {
  return k_max * descriptor_features(dim) + 2 * static_cast<std::size_t>(dim);
}

void validate(const NetConfig& c) {
  if (c.dim != 2 && c.dim != 3) fail(Errc::config, "network dimension must be 2 or 3");
  if (c.input_layers < 1 || c.head_layers < 1) fail(Errc::config, "layer counts must be positive");
  if (c.input_width < 1 || c.highway_width < 1 || c.head_width < 1) {
    fail(Errc::config, "layer widths must be positive");
  }
  (void)parameter_domain(c.anchors, c.degree);
}

struct MlpNet::Cache {
  Mat x;
  std::vector<Mat> in_pre, in_act;
  Mat rep;
  std::vector<Mat> hw_in, t_pre, t_act, g;
  Mat trunk;
  std::vector<Mat> head_pre, head_act;
};

MlpNet::MlpNet(const NetConfig& config) : config_(config) {
  validate(config_);
  build_layout();
  initialize(config_.seed);
}

MlpNet::MlpNet(const NetConfig& config, std::vector<double> parameters)
    : config_(config), params_(std::move(parameters)) {
  validate(config_);
  const std::size_t given = params_.size();
  build_layout();
  if (given != params_.size()) {
    fail(Errc::config, "parameter count " + std::to_string(given) + " does not match the " +
                           std::to_string(params_.size()) + " the configuration needs");
  }
}

void MlpNet::build_layout() {
  std::size_t offset = 0;
  auto dense = [&](std::size_t in, std::size_t out) {
    Dense d{in, out, offset};
    offset += in * out + out;
    return d;
  };
  input_.clear();
  transform_.clear();
  gate_.clear();
  heads_.clear();
  std::size_t width = config_.input_size();
  for (std::size_t l = 0; l < config_.input_layers; ++l) {
    input_.push_back(dense(width, config_.input_width));
    width = config_.input_width;
  }
  projection_ = dense(width, config_.highway_width);
  for (std::size_t l = 0; l < config_.highway_layers; ++l) {
    transform_.push_back(dense(config_.highway_width, config_.highway_width));
    gate_.push_back(dense(config_.highway_width, config_.highway_width));
  }
  const std::size_t out = static_cast<std::size_t>(config_.dim) + 1;
  for (std::size_t h = 0; h < config_.anchors; ++h) {
    std::size_t w = config_.highway_width;
    for (std::size_t l = 0; l < config_.head_layers; ++l) {
      const std::size_t next = l + 1 == config_.head_layers ? out : config_.head_width;
      heads_.push_back(dense(w, next));
      w = next;
    }
  }
  params_.resize(offset, 0.0);
}

void MlpNet::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&](const Dense& d, double gain, double bias) {
    const double a = gain / std::sqrt(static_cast<double>(d.in));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t i = 0; i < d.in * d.out; ++i) params_[d.offset + i] = u(rng);
    for (std::size_t i = 0; i < d.out; ++i) params_[d.offset + d.in * d.out + i] = bias;
  };
  const double relu_gain = std::sqrt(6.0);
  const double linear_gain = std::sqrt(3.0);
  for (const Dense& d : input_) fill(d, relu_gain, 0.0);
  fill(projection_, linear_gain, 0.0);
  for (std::size_t l = 0; l < transform_.size(); ++l) {
    fill(transform_[l], relu_gain, 0.0);
    fill(gate_[l], linear_gain, -1.0);
  }
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    const bool last = (i + 1) % config_.head_layers == 0;
    // Small final layer: initial anchors near the middle of the workspace.
    fill(heads_[i], last ? kHeadGain * linear_gain : relu_gain, 0.0);
  }
}

void MlpNet::run_forward(std::span<const ProblemSample> batch, Cache& c) const {
  const auto cols = static_cast<Index>(batch.size());
  const auto in = static_cast<Index>(config_.input_size());
  c.x.resize(in, cols);
  for (Index b = 0; b < cols; ++b) {
    const ProblemSample& s = batch[static_cast<std::size_t>(b)];
    if (s.scene.dim() != config_.dim || s.start.dim != config_.dim || s.goal.dim != config_.dim) {
      fail(Errc::config, "sample dimension does not match the network");
    }
    std::vector<double> v = vectorize_scene(s.scene, config_.k_max);
    const auto sn = normalize_point(s.scene, s.start);
    const auto gn = normalize_point(s.scene, s.goal);
    v.insert(v.end(), sn.begin(), sn.end());
    v.insert(v.end(), gn.begin(), gn.end());
    c.x.col(b) = Eigen::Map<const Vec>(v.data(), in);
  }

  auto affine = [&](const Dense& d, const Mat& x) {
    const Eigen::Map<const Mat> w(params_.data() + d.offset, static_cast<Index>(d.out),
                                  static_cast<Index>(d.in));
    const Eigen::Map<const Vec> bias(params_.data() + d.offset + d.in * d.out,
                                     static_cast<Index>(d.out));
    Mat z = w * x;
    z.colwise() += bias;
    return z;
  };

  c.in_pre.clear();
  c.in_act.clear();
  const Mat* a = &c.x;
  for (const Dense& d : input_) {
    c.in_pre.push_back(affine(d, *a));
    c.in_act.push_back(c.in_pre.back());
    relu_inplace(c.in_act.back());
    a = &c.in_act.back();
  }
  c.rep = affine(projection_, *a);

  c.hw_in.clear();
  c.t_pre.clear();
  c.t_act.clear();
  c.g.clear();
  Mat h = c.rep;
  for (std::size_t l = 0; l < transform_.size(); ++l) {
    c.hw_in.push_back(h);
    c.t_pre.push_back(affine(transform_[l], h));
    c.t_act.push_back(c.t_pre.back());
    relu_inplace(c.t_act.back());
    if (gates_closed_) {
      c.g.push_back(Mat::Zero(h.rows(), h.cols()));
    } else {
      c.g.push_back(affine(gate_[l], h).unaryExpr([](double v) { return logistic_value(v); }));
    }
    const Mat& g = c.g.back();
    h = g.cwiseProduct(c.t_act.back()) + (Mat::Ones(g.rows(), g.cols()) - g).cwiseProduct(h);
  }
  c.trunk = std::move(h);

  c.head_pre.assign(heads_.size(), Mat());
  c.head_act.assign(heads_.size(), Mat());
  const std::size_t depth = config_.head_layers;
  for (std::size_t k = 0; k < config_.anchors; ++k) {
    const Mat* x = &c.trunk;
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t i = k * depth + l;
      c.head_pre[i] = affine(heads_[i], *x);
      c.head_act[i] = c.head_pre[i];
      if (l + 1 < depth) relu_inplace(c.head_act[i]);
      x = &c.head_act[i];
    }
  }
}

SplinePath MlpNet::decode(const ProblemSample& s, const Cache& c, std::size_t column) const {
  const Bounds& b = s.scene.bounds();
  const int dim = config_.dim;
  SplinePath path;
  path.degree = config_.degree;
  path.start = s.start;
  path.goal = s.goal;
  const std::size_t depth = config_.head_layers;
  for (std::size_t k = 0; k < config_.anchors; ++k) {
    const Mat& raw = c.head_act[k * depth + depth - 1];
    const auto col = static_cast<Index>(column);
    Point a;
    a.dim = dim;
    for (int i = 0; i < dim; ++i) {
      const double center = 0.5 * (b.max[i] + b.min[i]);
      const double half = 0.5 * (b.max[i] - b.min[i]);
      a[i] = center + half * std::tanh(raw(i, col));
    }
    path.anchors.push_back(a);
    path.weights.push_back(config_.weights == WeightMode::fixed ? 1.0 : squash_weight(raw(dim, col)));
  }
  return path;
}

SplinePath MlpNet::forward(const ProblemSample& sample) const {
  return forward(std::span<const ProblemSample>(&sample, 1)).front();
}

std::vector<SplinePath> MlpNet::forward(std::span<const ProblemSample> batch) const {
  if (batch.empty()) return {};
  Cache c;
  run_forward(batch, c);
  std::vector<SplinePath> out;
  out.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) out.push_back(decode(batch[b], c, b));
  return out;
}

MlpNet::TrunkProbe MlpNet::probe_trunk(const ProblemSample& sample) const {
  Cache c;
  run_forward(std::span<const ProblemSample>(&sample, 1), c);
  TrunkProbe p;
  p.representation.assign(c.rep.data(), c.rep.data() + c.rep.size());
  p.output.assign(c.trunk.data(), c.trunk.data() + c.trunk.size());
  return p;
}

MlpNet::BatchLoss MlpNet::loss(std::span<const ProblemSample> batch, const CostParams& cost,
                               std::span<double> grad) const {
  if (batch.empty()) fail(Errc::invalid_argument, "empty batch");
  validate(cost);
  const bool need_grad = !grad.empty();
  if (need_grad && grad.size() != params_.size()) {
    fail(Errc::invalid_argument, "gradient buffer has the wrong size");
  }
  Cache c;
  run_forward(batch, c);
  const SampleBasis basis(config_.anchors, config_.degree, cost.step);
  const int dim = config_.dim;
  const auto out_rows = static_cast<Index>(dim + 1);
  const auto cols = static_cast<Index>(batch.size());
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const std::size_t depth = config_.head_layers;

  BatchLoss result;
  Signature sig;
  std::vector<Mat> d_raw(config_.anchors, Mat::Zero(out_rows, cols));
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const SplinePath path = decode(batch[b], c, b);
    const SampleGrad sg = path_loss(batch[b].scene, basis, path, cost.safe_distance, need_grad, sig);
    result.losses.push_back(sg.value);
    sum += sg.value;
    result.collision_free += sg.collision_free ? 1 : 0;
    const Bounds& bounds = batch[b].scene.bounds();
    for (std::size_t k = 0; k < config_.anchors; ++k) {
      const Mat& raw = c.head_act[k * depth + depth - 1];
      const auto col = static_cast<Index>(b);
      if (!need_grad) continue;
      for (int i = 0; i < dim; ++i) {
        const double half = 0.5 * (bounds.max[i] - bounds.min[i]);
        const double t = std::tanh(raw(i, col));
        d_raw[k](i, col) = sg.d_anchor[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)] *
                           half * (1.0 - t * t) * inv_batch;
      }
      if (config_.weights == WeightMode::trainable) {
        const double w = logistic_value(raw(dim, col));
        d_raw[k](dim, col) = sg.d_weight[k] * (1.0 - kMinWeight) * w * (1.0 - w) * inv_batch;
      }
    }
  }
  result.mean_loss = sum * inv_batch;
  for (const Mat& m : c.in_pre) mix_signs(sig, m);
  for (const Mat& m : c.t_pre) mix_signs(sig, m);
  for (std::size_t i = 0; i < c.head_pre.size(); ++i) {
    if ((i + 1) % depth != 0) mix_signs(sig, c.head_pre[i]);
  }
  result.signature = sig.h;
  if (!need_grad) return result;

  std::fill(grad.begin(), grad.end(), 0.0);
  // Accumulates parameter gradients of layer d given dL/dz, returns dL/dx.
  auto back = [&](const Dense& d, const Mat& x, const Mat& dz, bool want_dx) {
    Eigen::Map<Mat> gw(grad.data() + d.offset, static_cast<Index>(d.out), static_cast<Index>(d.in));
    Eigen::Map<Vec> gb(grad.data() + d.offset + d.in * d.out, static_cast<Index>(d.out));
    gw.noalias() += dz * x.transpose();
    gb += dz.rowwise().sum();
    if (!want_dx) return Mat();
    const Eigen::Map<const Mat> w(params_.data() + d.offset, static_cast<Index>(d.out),
                                  static_cast<Index>(d.in));
    return Mat(w.transpose() * dz);
  };
  auto relu_mask = [](const Mat& pre, const Mat& d) {
    return Mat(d.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; })));
  };

  Mat d_trunk = Mat::Zero(c.trunk.rows(), c.trunk.cols());
  for (std::size_t k = 0; k < config_.anchors; ++k) {
    Mat dz = d_raw[k];
    for (std::size_t l = depth; l-- > 0;) {
      const std::size_t i = k * depth + l;
      const Mat& x = l == 0 ? c.trunk : c.head_act[i - 1];
      Mat dx = back(heads_[i], x, dz, true);
      if (l == 0) {
        d_trunk += dx;
      } else {
        dz = relu_mask(c.head_pre[i - 1], dx);
      }
    }
  }

  Mat dh = std::move(d_trunk);
  for (std::size_t l = transform_.size(); l-- > 0;) {
    const Mat& x = c.hw_in[l];
    const Mat& g = c.g[l];
    const Mat& t = c.t_act[l];
    Mat dx = dh.cwiseProduct(Mat::Ones(g.rows(), g.cols()) - g);
    const Mat dt_pre = relu_mask(c.t_pre[l], dh.cwiseProduct(g));
    dx += back(transform_[l], x, dt_pre, true);
    if (!gates_closed_) {
      const Mat dg = dh.cwiseProduct(t - x);
      const Mat dg_pre = dg.cwiseProduct(g.cwiseProduct(Mat::Ones(g.rows(), g.cols()) - g));
      dx += back(gate_[l], x, dg_pre, true);
    }
    dh = std::move(dx);
  }

  const Mat& proj_in = input_.empty() ? c.x : c.in_act.back();
  Mat da = back(projection_, proj_in, dh, !input_.empty());
  for (std::size_t l = input_.size(); l-- > 0;) {
    const Mat dz = relu_mask(c.in_pre[l], da);
    const Mat& x = l == 0 ? c.x : c.in_act[l - 1];
    da = back(input_[l], x, dz, l > 0);
  }
  return result;
}

TrainConfig train_defaults(SceneFamily family) {
  const FamilyDefaults d = family_defaults(family);
  TrainConfig t;
  t.family = family;
  t.net.dim = family == SceneFamily::simple2d ? 2 : 3;
  t.net.k_max = d.max_obstacles;
  t.net.anchors = d.anchors;
  t.net.degree = d.degree;
  t.cost = d.cost;
  // Trainable weights collapse towards the minimum within a few dozen steps
  // and the decoded paths degenerate to straight lines.
  t.net.weights = WeightMode::fixed;
  t.learning_rate = 1e-3;
  t.schedule = LrSchedule::cosine;
  t.steps = family == SceneFamily::simple2d ? 20000 : 2000;
  return t;
}

void validate(const TrainConfig& c) {
  validate(c.net);
  validate(c.cost);
  if (c.batch_size < 1) fail(Errc::config, "batch size must be positive");
  if (c.steps < 1) fail(Errc::config, "training needs at least one step");
  if (!(c.learning_rate >= 0.0)) fail(Errc::config, "learning rate must be non-negative");
  if (!(c.beta1 > 0.0 && c.beta1 < 1.0) || !(c.beta2 > 0.0 && c.beta2 < 1.0) || !(c.epsilon > 0.0)) {
    fail(Errc::config, "invalid Adam coefficients");
  }
  if (!(c.collide_fraction >= 0.0 && c.collide_fraction <= 1.0)) {
    fail(Errc::config, "collide fraction must lie in [0, 1]");
  }
}

namespace {

std::vector<ProblemSample> training_batch(const TrainConfig& c, std::size_t step) {
  std::vector<ProblemSample> batch;
  batch.reserve(c.batch_size);
  for (std::size_t b = 0; b < c.batch_size; ++b) {
    batch.push_back(sample_problem(c.family, c.collide_fraction, c.seed, step * c.batch_size + b));
  }
  return batch;
}

nlohmann::json point_json(const Point& p) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < p.dim; ++i) a.push_back(p[i]);
  return a;
}

void dump_batch(const std::string& path, std::span<const ProblemSample> batch,
                std::span<const double> losses) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    nlohmann::json obstacles = nlohmann::json::array();
    for (const Obstacle& o : batch[b].scene.obstacles()) {
      nlohmann::json oj;
      oj["center"] = point_json(o.center());
      if (const auto* s = std::get_if<Sphere>(&o.shape())) {
        oj["type"] = "sphere";
        oj["radius"] = s->radius;
      } else {
        oj["type"] = "box";
        oj["half_extents"] = point_json(std::get<Box>(o.shape()).half_extents);
      }
      obstacles.push_back(oj);
    }
    j.push_back({{"obstacles", obstacles},
                 {"start", point_json(batch[b].start)},
                 {"goal", point_json(batch[b].goal)},
                 {"loss", b < losses.size() && std::isfinite(losses[b]) ? nlohmann::json(losses[b])
                                                                         : nlohmann::json(nullptr)}});
  }
  std::ofstream(path) << j.dump(2) << '\n';
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  validate(config);
  return train(config, MlpNet(config.net));
}

TrainResult train(const TrainConfig& config, MlpNet net) {
  validate(config);
  if (net.config().dim != config.net.dim || net.config().anchors != config.net.anchors ||
      net.config().k_max != config.net.k_max) {
    fail(Errc::config, "network shape does not match the training configuration");
  }
  Adam adam(net.parameter_count(),
            AdamConfig{config.learning_rate, config.beta1, config.beta2, config.epsilon});
  std::vector<double> grad(net.parameter_count(), 0.0);
  std::vector<TracePoint> trace;
  trace.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const std::vector<ProblemSample> batch = training_batch(config, step);
    MlpNet::BatchLoss bl;
    bool finite = true;
    std::string reason;
    try {
      bl = net.loss(batch, config.cost, grad);
      finite = std::isfinite(bl.mean_loss) &&
               std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
    } catch (const Error& e) {
      if (e.code() != Errc::numeric && e.code() != Errc::numeric_domain) throw;
      finite = false;
      reason = e.what();
    }
    if (!finite) {
      std::string where;
      if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        where = (std::filesystem::path(config.out_dir) / "nonfinite_batch.json").string();
        dump_batch(where, batch, bl.losses);
      }
      fail(Errc::numeric, "non-finite training loss at step " + std::to_string(step) +
                              (reason.empty() ? "" : " (" + reason + ")") +
                              (where.empty() ? "" : "; batch written to " + where));
    }
    trace.push_back({step, bl.mean_loss,
                     static_cast<double>(bl.collision_free) / static_cast<double>(batch.size())});
    if (config.schedule == LrSchedule::cosine) {
      const double progress = static_cast<double>(step) / static_cast<double>(config.steps);
      adam.set_learning_rate(0.5 * config.learning_rate * (1.0 + std::cos(std::numbers::pi * progress)));
    }
    adam.step(net.parameters(), grad);
  }
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    save_checkpoint(net, (std::filesystem::path(config.out_dir) / "checkpoint.json").string());
    write_trace_csv(trace, (std::filesystem::path(config.out_dir) / "loss_trace.csv").string());
  }
  return TrainResult{std::move(net), std::move(trace)};
}

bool judged_success(const Scene& scene, const SplinePath& path, const CostParams& cost) {
  const SampleSet s = sample_path(path, 0.5 * cost.step);
  return exact_collision_cost(scene, s) == 0.0;
}

double length_ratio(const SplinePath& path, const CostParams& cost) {
  const double straight = distance(path.start, path.goal);
  const double len = path_length(sample_path(path, 0.5 * cost.step));
  return straight > 0.0 ? len / straight : 1.0;
}

namespace {

EvalMetrics summarize(std::span<const ProblemSample> problems, std::span<const SplinePath> paths,
                      const CostParams& cost, double total_ms) {
  EvalMetrics m;
  m.problems = problems.size();
  std::size_t ok = 0;
  double ratio = 0.0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (judged_success(problems[i].scene, paths[i], cost)) {
      ++ok;
      ratio += length_ratio(paths[i], cost);
    }
  }
  m.success_rate = static_cast<double>(ok) / static_cast<double>(problems.size());
  m.mean_length_ratio = ok > 0 ? ratio / static_cast<double>(ok) : 0.0;
  m.mean_inference_ms = total_ms / static_cast<double>(problems.size());
  return m;
}

}  // namespace

EvalMetrics evaluate(const MlpNet& net, std::span<const ProblemSample> problems,
                     const CostParams& cost) {
  if (problems.empty()) fail(Errc::invalid_argument, "evaluation needs at least one problem");
  std::vector<SplinePath> paths;
  paths.reserve(problems.size());
  double total_ms = 0.0;
  for (const ProblemSample& p : problems) {
    const auto t0 = std::chrono::steady_clock::now();
    paths.push_back(net.forward(p));
    total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return summarize(problems, paths, cost, total_ms);
}

EvalMetrics evaluate_paths(std::span<const ProblemSample> problems,
                           std::span<const SplinePath> paths, const CostParams& cost) {
  if (problems.empty()) fail(Errc::invalid_argument, "evaluation needs at least one problem");
  if (paths.size() != problems.size()) fail(Errc::invalid_argument, "one path per problem required");
  return summarize(problems, paths, cost, 0.0);
}

std::string checkpoint_json(const MlpNet& net) {
  const NetConfig& c = net.config();
  nlohmann::json j;
  j["format"] = "upr-mlp";
  j["version"] = kCheckpointVersion;
  j["config"] = {{"dim", c.dim},
                 {"k_max", c.k_max},
                 {"anchors", c.anchors},
                 {"degree", c.degree},
                 {"input_width", c.input_width},
                 {"input_layers", c.input_layers},
                 {"highway_width", c.highway_width},
                 {"highway_layers", c.highway_layers},
                 {"head_width", c.head_width},
                 {"head_layers", c.head_layers},
                 {"weights", c.weights == WeightMode::fixed ? "fixed" : "trainable"},
                 {"seed", c.seed}};
  j["parameter_count"] = net.parameter_count();
  j["parameters"] = std::vector<double>(net.parameters().begin(), net.parameters().end());
  return j.dump();
}

MlpNet checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "upr-mlp") fail(Errc::parse, "not a network checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      fail(Errc::unsupported, "unsupported checkpoint version");
    }
    const auto& cj = j.at("config");
    NetConfig c;
    c.dim = cj.at("dim").get<int>();
    c.k_max = cj.at("k_max").get<std::size_t>();
    c.anchors = cj.at("anchors").get<std::size_t>();
    c.degree = cj.at("degree").get<int>();
    c.input_width = cj.at("input_width").get<std::size_t>();
    c.input_layers = cj.at("input_layers").get<std::size_t>();
    c.highway_width = cj.at("highway_width").get<std::size_t>();
    c.highway_layers = cj.at("highway_layers").get<std::size_t>();
    c.head_width = cj.at("head_width").get<std::size_t>();
    c.head_layers = cj.at("head_layers").get<std::size_t>();
    const std::string weights = cj.at("weights").get<std::string>();
    if (weights != "fixed" && weights != "trainable") fail(Errc::parse, "unknown weight mode '" + weights + "'");
    c.weights = weights == "fixed" ? WeightMode::fixed : WeightMode::trainable;
    c.seed = cj.at("seed").get<std::uint64_t>();
    return MlpNet(c, j.at("parameters").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const MlpNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  out << checkpoint_json(net) << '\n';
  if (!out) fail(Errc::io, "failed writing '" + path + "'");
}

MlpNet load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

void write_trace_csv(std::span<const TracePoint> trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  out << "step,mean_loss,success_rate_estimate\n";
  out.precision(17);
  for (const TracePoint& t : trace) {
    out << t.step << ',' << t.mean_loss << ',' << t.success_rate_estimate << '\n';
  }
  if (!out) fail(Errc::io, "failed writing '" + path + "'");
}

NetGradCheck grad_check_network(const MlpNet& net, std::span<const ProblemSample> batch,
                                const CostParams& cost, std::size_t coords, double h,
                                std::uint64_t seed) {
  if (!(h > 0.0)) fail(Errc::invalid_argument, "step must be positive");
  std::vector<double> grad(net.parameter_count(), 0.0);
  const auto base = net.loss(batch, cost, grad);
  MlpNet probe = net;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, net.parameter_count() - 1);
  NetGradCheck report;
  for (std::size_t t = 0; t < coords; ++t) {
    const std::size_t i = pick(rng);
    const double x0 = probe.parameters()[i];
    probe.parameters()[i] = x0 + h;
    const auto up = probe.loss(batch, cost, {});
    probe.parameters()[i] = x0 - h;
    const auto down = probe.loss(batch, cost, {});
    probe.parameters()[i] = x0;
    if (up.signature != base.signature || down.signature != base.signature) {
      ++report.skipped;
      continue;
    }
    const double numeric = (up.mean_loss - down.mean_loss) / (2.0 * h);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(grad[i] - numeric) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace upr
