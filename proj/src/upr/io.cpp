#include "upr/io.hpp"

#include <fstream>
#include <sstream>

#include "upr/error.hpp"

namespace upr::io {
namespace {

template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("malformed ") + what + ": " + e.what());
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const Point& p) {
  json a = json::array();
  for (int i = 0; i < p.dim; ++i) a.push_back(p[i]);
  return a;
}

Point point_from_json(const json& j) {
  return guarded("point", [&] {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2 && v.size() != 3) fail(Errc::parse, "points need 2 or 3 coordinates");
    return point_from(v);
  });
}

json to_json(const Scene& scene) {
  json obstacles = json::array();
  for (const Obstacle& o : scene.obstacles()) {
    if (const auto* s = std::get_if<Sphere>(&o.shape())) {
      obstacles.push_back({{"kind", "sphere"}, {"center", to_json(s->center)}, {"radius", s->radius}});
    } else {
      const Box& b = std::get<Box>(o.shape());
      obstacles.push_back(
          {{"kind", "box"}, {"center", to_json(b.center)}, {"half_extents", to_json(b.half_extents)}});
    }
  }
  return {{"dim", scene.dim()},
          {"bounds", {{"min", to_json(scene.bounds().min)}, {"max", to_json(scene.bounds().max)}}},
          {"obstacles", obstacles}};
}

Scene scene_from_json(const json& j) {
  return guarded("scene", [&] {
    Bounds b;
    b.min = point_from_json(j.at("bounds").at("min"));
    b.max = point_from_json(j.at("bounds").at("max"));
    std::vector<Obstacle> obstacles;
    for (const json& o : j.at("obstacles")) {
      const std::string kind = o.at("kind").get<std::string>();
      const Point c = point_from_json(o.at("center"));
      if (kind == "sphere") {
        obstacles.push_back(Obstacle::sphere(c, o.at("radius").get<double>()));
      } else if (kind == "box") {
        obstacles.push_back(Obstacle::box(c, point_from_json(o.at("half_extents"))));
      } else {
        fail(Errc::parse, "unknown obstacle kind '" + kind + "'");
      }
    }
    return Scene(j.at("dim").get<int>(), b, std::move(obstacles));
  });
}

json to_json(const SplinePath& path) {
  json anchors = json::array();
  for (const Point& a : path.anchors) anchors.push_back(to_json(a));
  return {{"degree", path.degree},
          {"start", to_json(path.start)},
          {"goal", to_json(path.goal)},
          {"anchors", anchors},
          {"weights", path.weights}};
}

SplinePath path_from_json(const json& j) {
  return guarded("path", [&] {
    SplinePath p;
    p.degree = j.at("degree").get<int>();
    p.start = point_from_json(j.at("start"));
    p.goal = point_from_json(j.at("goal"));
    for (const json& a : j.at("anchors")) p.anchors.push_back(point_from_json(a));
    if (j.contains("weights")) {
      p.weights = j.at("weights").get<std::vector<double>>();
    } else {
      p.weights.assign(p.anchors.size(), 1.0);
    }
    p.validate();
    return p;
  });
}

json to_json(const ProblemSample& s) {
  return {{"scene", to_json(s.scene)},
          {"start", to_json(s.start)},
          {"goal", to_json(s.goal)},
          {"straight_line_collides", s.straight_line_collides}};
}

ProblemSample problem_from_json(const json& j) {
  return guarded("problem", [&] {
    ProblemSample s{scene_from_json(j.at("scene")), point_from_json(j.at("start")),
                    point_from_json(j.at("goal")), false};
    if (s.start.dim != s.scene.dim() || s.goal.dim != s.scene.dim()) {
      fail(Errc::parse, "start and goal must match the scene dimension");
    }
    // Recomputed rather than trusted.
    s.straight_line_collides = straight_line_collides(s.scene, s.start, s.goal);
    return s;
  });
}

json to_json(const CostParams& p) { return {{"step", p.step}, {"safe_distance", p.safe_distance}}; }

CostParams cost_params_from_json(const json& j) {
  return guarded("cost parameters", [&] {
    CostParams p;
    read_opt(j, "step", p.step);
    read_opt(j, "safe_distance", p.safe_distance);
    validate(p);
    return p;
  });
}

json to_json(const ChompParams& p) { return {{"lambda", p.lambda}, {"epsilon", p.epsilon}}; }

ChompParams chomp_params_from_json(const json& j) {
  return guarded("CHOMP parameters", [&] {
    ChompParams p;
    read_opt(j, "lambda", p.lambda);
    read_opt(j, "epsilon", p.epsilon);
    validate(p);
    return p;
  });
}

json to_json(const CostBreakdown& b) {
  return {{"length", b.length},
          {"exact_collision", b.exact_collision},
          {"smooth_collision", b.smooth_collision},
          {"total_smooth", b.total_smooth},
          {"collides", b.collides}};
}

json to_json(const PlanResult& r) {
  return {{"path", to_json(r.path)},
          {"breakdown", to_json(r.breakdown)},
          {"objective", r.objective},
          {"iterations", r.iterations},
          {"restart", r.restart},
          {"wall_ms", r.wall_ms},
          {"success", r.success}};
}

json to_json(const PropertyReport& r) {
  return {{"trials", r.trials},
          {"mp_violations", r.mp_violations},
          {"np_violations", r.np_violations},
          {"gp_violations", r.gp_violations},
          {"gp_slack", r.gp_slack},
          {"optimum_length", r.optimum_length},
          {"optimum_exact", r.optimum_exact},
          {"worst_gp_margin", r.worst_gp_margin}};
}

json to_json(const EvalMetrics& m) {
  return {{"problems", m.problems},
          {"success_rate", m.success_rate},
          {"mean_length_ratio", m.mean_length_ratio},
          {"mean_inference_ms", m.mean_inference_ms}};
}

json to_json(const Raster& r) {
  json rows = json::array();
  const std::size_t n = r.grid.resolution;
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back(std::vector<double>(r.values.begin() + static_cast<std::ptrdiff_t>(i * n),
                                       r.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
  }
  return {{"min", to_json(r.grid.min)},
          {"max", to_json(r.grid.max)},
          {"resolution", n},
          {"value_min", r.min},
          {"value_max", r.max},
          {"values", rows}};
}

OptimizerConfig optimizer_config_from_json(const json& j, OptimizerConfig c) {
  return guarded("optimizer config", [&] {
    read_opt(j, "anchors", c.anchors);
    read_opt(j, "degree", c.degree);
    read_opt(j, "lr_fraction", c.lr_fraction);
    read_opt(j, "max_iterations", c.max_iterations);
    read_opt(j, "beta1", c.beta1);
    read_opt(j, "beta2", c.beta2);
    read_opt(j, "epsilon", c.epsilon);
    read_opt(j, "restarts", c.restarts);
    read_opt(j, "tolerance", c.tolerance);
    read_opt(j, "patience", c.patience);
    read_opt(j, "plateau_halvings", c.plateau_halvings);
    read_opt(j, "restart_sigma_fraction", c.restart_sigma_fraction);
    read_opt(j, "feasibility_steps", c.feasibility_steps);
    read_opt(j, "check_divisor", c.check_divisor);
    read_opt(j, "seed", c.seed);
    if (j.contains("weights")) {
      const std::string w = j.at("weights").get<std::string>();
      if (w == "fixed") {
        c.weights = WeightMode::fixed;
      } else if (w == "trainable") {
        c.weights = WeightMode::trainable;
      } else {
        fail(Errc::config, "unknown weight mode '" + w + "'");
      }
    }
    validate(c);
    return c;
  });
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  return guarded("training config", [&] {
    if (j.contains("family")) {
      const SceneFamily f = parse_family(j.at("family").get<std::string>());
      if (f != c.family) {
        const TrainConfig d = train_defaults(f);
        c.family = f;
        c.net = d.net;
        c.cost = d.cost;
      }
    }
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "steps", c.steps);
    read_opt(j, "learning_rate", c.learning_rate);
    if (j.contains("schedule")) {
      const std::string sc = j.at("schedule").get<std::string>();
      if (sc != "constant" && sc != "cosine") fail(Errc::config, "unknown learning-rate schedule '" + sc + "'");
      c.schedule = sc == "cosine" ? LrSchedule::cosine : LrSchedule::constant;
    }
    read_opt(j, "beta1", c.beta1);
    read_opt(j, "beta2", c.beta2);
    read_opt(j, "epsilon", c.epsilon);
    read_opt(j, "collide_fraction", c.collide_fraction);
    read_opt(j, "seed", c.seed);
    if (j.contains("cost")) c.cost = cost_params_from_json(j.at("cost"));
    if (j.contains("net")) {
      const json& n = j.at("net");
      read_opt(n, "input_width", c.net.input_width);
      read_opt(n, "input_layers", c.net.input_layers);
      read_opt(n, "highway_width", c.net.highway_width);
      read_opt(n, "highway_layers", c.net.highway_layers);
      read_opt(n, "head_width", c.net.head_width);
      read_opt(n, "head_layers", c.net.head_layers);
      read_opt(n, "seed", c.net.seed);
      if (n.contains("weights")) {
        const std::string w = n.at("weights").get<std::string>();
        if (w != "fixed" && w != "trainable") fail(Errc::config, "unknown weight mode '" + w + "'");
        c.net.weights = w == "fixed" ? WeightMode::fixed : WeightMode::trainable;
      }
    }
    validate(c);
    return c;
  });
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("invalid JSON: ") + e.what());
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, "invalid JSON in '" + path + "': " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(Errc::io, "failed writing '" + path + "'");
}

}  // namespace upr::io
