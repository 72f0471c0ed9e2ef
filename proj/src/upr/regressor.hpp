#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "upr/autodiff.hpp"
#include "upr/cost.hpp"
#include "upr/optimizer.hpp"
#include "upr/scenegen.hpp"

namespace upr {

// Per obstacle: kind (1 sphere, 2 box), centre, size (radius or half
// extents; a sphere leaves all but the first size slot at zero). Centres map
// the scene bounds onto [-1, 1]; sizes are divided by the bounds' half width.
// Missing obstacles are zero rows.
std::size_t descriptor_features(int dim);
std::vector<double> vectorize_scene(const Scene& scene, std::size_t k_max);
// Point mapped from the scene bounds onto [-1, 1].
std::vector<double> normalize_point(const Scene& scene, const Point& p);

struct NetConfig {
  int dim = 2;
  std::size_t k_max = 2;
  std::size_t anchors = 1;
  int degree = 2;
  std::size_t input_width = 128;
  std::size_t input_layers = 2;
  std::size_t highway_width = 256;
  std::size_t highway_layers = 4;
  std::size_t head_width = 128;
  std::size_t head_layers = 3;
  // Fixed: decoded weights are 1 and the weight logits receive no gradient.
  WeightMode weights = WeightMode::trainable;
  std::uint64_t seed = 0;

  std::size_t input_size() const;
};

void validate(const NetConfig& config);

// Highway MLP mapping (scene descriptor, start, goal) to spline anchors and
// weights. Parameters live in one flat vector.
class MlpNet {
 public:
  // Random initialisation from config.seed.
  explicit MlpNet(const NetConfig& config);
  // Given parameters; size must match.
  MlpNet(const NetConfig& config, std::vector<double> parameters);

  const NetConfig& config() const { return config_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  SplinePath forward(const ProblemSample& sample) const;
  std::vector<SplinePath> forward(std::span<const ProblemSample> batch) const;

  // Forces every transform gate closed (gate output 0) when set.
  void set_gates_closed(bool closed) { gates_closed_ = closed; }

  // Trunk input representation and trunk output for one sample.
  struct TrunkProbe {
    std::vector<double> representation;
    std::vector<double> output;
  };
  TrunkProbe probe_trunk(const ProblemSample& sample) const;

  struct BatchLoss {
    double mean_loss = 0.0;
    std::size_t collision_free = 0;
    std::vector<double> losses;
    // Hash of every piecewise decision (ReLU signs, SDF pieces, collision
    // labels). Used to reject finite-difference stencils that straddle a kink.
    std::uint64_t signature = 0;
  };
  // Mean total_smooth over the batch; fills `grad` (parameter-sized) when
  // non-empty.
  BatchLoss loss(std::span<const ProblemSample> batch, const CostParams& cost,
                 std::span<double> grad) const;

 private:
  struct Dense {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t offset = 0;
  };
  struct Cache;

  void build_layout();
  void initialize(std::uint64_t seed);
  void run_forward(std::span<const ProblemSample> batch, Cache& cache) const;
  SplinePath decode(const ProblemSample& sample, const Cache& cache, std::size_t column) const;

  NetConfig config_;
  std::vector<double> params_;
  std::vector<Dense> input_;
  Dense projection_;
  std::vector<Dense> transform_;
  std::vector<Dense> gate_;
  std::vector<Dense> heads_;  // head h, layer l at h * head_layers + l
  bool gates_closed_ = false;
};

struct TracePoint {
  std::size_t step = 0;
  double mean_loss = 0.0;
  double success_rate_estimate = 0.0;
};

// Constant, or cosine decay from learning_rate to zero over the run.
enum class LrSchedule { constant, cosine };

struct TrainConfig {
  SceneFamily family = SceneFamily::simple2d;
  NetConfig net;
  std::size_t batch_size = 32;
  std::size_t steps = 2000;
  double learning_rate = 1e-4;
  LrSchedule schedule = LrSchedule::constant;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double collide_fraction = 0.5;
  CostParams cost;
  std::uint64_t seed = 0;
  // Optional; a checkpoint and a batch dump on failure are written here.
  std::string out_dir;
};

// Network shape and cost settings matching a scene family.
TrainConfig train_defaults(SceneFamily family);
void validate(const TrainConfig& config);

struct TrainResult {
  MlpNet net;
  std::vector<TracePoint> trace;
};

TrainResult train(const TrainConfig& config);
// Continues from `net`.
TrainResult train(const TrainConfig& config, MlpNet net);

struct EvalMetrics {
  std::size_t problems = 0;
  double success_rate = 0.0;
  double mean_length_ratio = 0.0;  // successful paths only; 0 if none
  double mean_inference_ms = 0.0;
};

// Success: zero exact collision at step cost.step / 2.
bool judged_success(const Scene& scene, const SplinePath& path, const CostParams& cost);
double length_ratio(const SplinePath& path, const CostParams& cost);

EvalMetrics evaluate(const MlpNet& net, std::span<const ProblemSample> problems,
                     const CostParams& cost);
// Same metrics for fixed paths (one per problem).
EvalMetrics evaluate_paths(std::span<const ProblemSample> problems,
                           std::span<const SplinePath> paths, const CostParams& cost);

void save_checkpoint(const MlpNet& net, const std::string& path);
MlpNet load_checkpoint(const std::string& path);
std::string checkpoint_json(const MlpNet& net);
MlpNet checkpoint_from_json(const std::string& text);

void write_trace_csv(std::span<const TracePoint> trace, const std::string& path);

struct NetGradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // stencils crossing a kink
};
// Central differences on `coords` random parameters of the batch loss.
NetGradCheck grad_check_network(const MlpNet& net, std::span<const ProblemSample> batch,
                                const CostParams& cost, std::size_t coords, double h,
                                std::uint64_t seed);

}  // namespace upr
