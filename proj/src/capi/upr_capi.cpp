#include "upr/upr.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "upr/error.hpp"
#include "upr/harness.hpp"
#include "upr/io.hpp"

struct upr_scene {
  upr::Scene scene;
};
struct upr_path {
  upr::SplinePath path;
};
struct upr_net {
  upr::MlpNet net;
};

namespace {

thread_local std::string g_last_error;

upr_status status_of(upr::Errc c) { return static_cast<upr_status>(static_cast<int>(c)); }

template <class F>
upr_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return UPR_OK;
  } catch (const upr::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return UPR_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UPR_E_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) upr::fail(upr::Errc::invalid_argument, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

upr::SceneFamily family_of(const char* name) {
  require(name, "family");
  return upr::parse_family(name);
}

upr::CostFunction cost_function_of(const char* name) {
  const std::string s = name == nullptr ? "ours" : name;
  if (s == "ours") return upr::CostFunction{upr::CostKind::smooth, {}};
  if (s == "exact") return upr::CostFunction{upr::CostKind::exact, {}};
  if (s.rfind("chomp", 0) == 0) {
    upr::ChompParams cp;
    if (s.size() > 5) {
      // chomp:lambda,epsilon
      const auto comma = s.find(',');
      if (s[5] != ':' || comma == std::string::npos) {
        upr::fail(upr::Errc::config, "CHOMP heatmap cost must look like chomp:lambda,epsilon");
      }
      try {
        cp.lambda = std::stod(s.substr(6, comma - 6));
        cp.epsilon = std::stod(s.substr(comma + 1));
      } catch (const std::exception&) {
        upr::fail(upr::Errc::config, "CHOMP heatmap cost must look like chomp:lambda,epsilon");
      }
    }
    upr::validate(cp);
    return upr::CostFunction{upr::CostKind::chomp, cp};
  }
  upr::fail(upr::Errc::config, "unknown heatmap cost '" + s + "'");
}

upr::SceneFamily family_for(const upr::ProblemSample& p) {
  return p.scene.dim() == 2 ? upr::SceneFamily::simple2d : upr::SceneFamily::boxworld3d;
}

}  // namespace

extern "C" {

const char* upr_version(void) { return "1.0.0"; }

const char* upr_last_error(void) { return g_last_error.c_str(); }

const char* upr_status_name(upr_status status) {
  if (status == UPR_OK) return "ok";
  if (status == UPR_E_INTERNAL) return "internal";
  if (status >= UPR_E_INVALID_ARGUMENT && status <= UPR_E_PARSE) {
    return upr::errc_name(static_cast<upr::Errc>(static_cast<int>(status)));
  }
  return "unknown";
}

void upr_string_free(char* s) { std::free(s); }

upr_status upr_scene_from_json(const char* json, upr_scene** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    *out = new upr_scene{upr::io::scene_from_json(upr::io::parse(json))};
  });
}

upr_status upr_scene_to_json(const upr_scene* scene, char** out) {
  return guard([&] {
    require(scene, "scene");
    require(out, "out");
    *out = dup(upr::io::to_json(scene->scene).dump());
  });
}

int upr_scene_dim(const upr_scene* scene) { return scene == nullptr ? 0 : scene->scene.dim(); }

size_t upr_scene_obstacle_count(const upr_scene* scene) {
  return scene == nullptr ? 0 : scene->scene.obstacles().size();
}

void upr_scene_free(upr_scene* scene) { delete scene; }

upr_status upr_path_from_json(const char* json, upr_path** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    *out = new upr_path{upr::io::path_from_json(upr::io::parse(json))};
  });
}

upr_status upr_path_to_json(const upr_path* path, char** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = dup(upr::io::to_json(path->path).dump());
  });
}

void upr_path_free(upr_path* path) { delete path; }

upr_status upr_total_loss(const upr_scene* scene, const upr_path* path, double step,
                          double safe_distance, upr_breakdown* out) {
  return guard([&] {
    require(scene, "scene");
    require(path, "path");
    require(out, "out");
    if (path->path.dim() != scene->scene.dim()) {
      upr::fail(upr::Errc::invalid_argument, "path and scene dimensions differ");
    }
    const upr::CostBreakdown b = upr::total_loss(scene->scene, path->path, upr::CostParams{step, safe_distance});
    *out = upr_breakdown{b.length, b.exact_collision, b.smooth_collision, b.total_smooth, b.collides ? 1 : 0};
  });
}

upr_status upr_generate(const char* family, uint64_t seed, size_t count, double collide_fraction,
                        char** out_json) {
  return guard([&] {
    require(out_json, "out_json");
    const upr::SceneFamily f = family_of(family);
    const auto problems = f == upr::SceneFamily::simple2d ? upr::gen_simple2d(seed, count)
                                                          : upr::gen_boxworld3d(seed, count, collide_fraction);
    upr::io::json arr = upr::io::json::array();
    for (const auto& p : problems) arr.push_back(upr::io::to_json(p));
    *out_json = dup(arr.dump());
  });
}

upr_status upr_plan(const char* problem_json, const char* config_json, char** out_json) {
  return guard([&] {
    require(problem_json, "problem_json");
    require(out_json, "out_json");
    const upr::ProblemSample p = upr::io::problem_from_json(upr::io::parse(problem_json));
    const upr::FamilyDefaults d = upr::family_defaults(family_for(p));
    upr::CostParams cost = d.cost;
    upr::OptimizerConfig oc = d.optimizer;
    if (config_json != nullptr) {
      const upr::io::json c = upr::io::parse(config_json);
      if (c.contains("cost")) cost = upr::io::cost_params_from_json(c.at("cost"));
      if (c.contains("optimizer")) oc = upr::io::optimizer_config_from_json(c.at("optimizer"), oc);
    }
    *out_json = dup(upr::io::to_json(upr::optimize_path(p.problem(), cost, oc)).dump());
  });
}

upr_status upr_net_create(const char* family, uint64_t seed, upr_net** out) {
  return guard([&] {
    require(out, "out");
    upr::TrainConfig t = upr::train_defaults(family_of(family));
    t.net.seed = seed;
    *out = new upr_net{upr::MlpNet(t.net)};
  });
}

upr_status upr_net_load(const char* path, upr_net** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new upr_net{upr::load_checkpoint(path)};
  });
}

upr_status upr_net_save(const upr_net* net, const char* path) {
  return guard([&] {
    require(net, "net");
    require(path, "path");
    upr::save_checkpoint(net->net, path);
  });
}

size_t upr_net_parameter_count(const upr_net* net) { return net == nullptr ? 0 : net->net.parameter_count(); }

upr_status upr_net_forward(const upr_net* net, const char* problem_json, char** path_json) {
  return guard([&] {
    require(net, "net");
    require(problem_json, "problem_json");
    require(path_json, "path_json");
    const upr::ProblemSample p = upr::io::problem_from_json(upr::io::parse(problem_json));
    *path_json = dup(upr::io::to_json(net->net.forward(p)).dump());
  });
}

void upr_net_free(upr_net* net) { delete net; }

upr_status upr_train(const char* config_json, const char* out_dir, upr_net** out, char** summary_json) {
  return guard([&] {
    require(out, "out");
    upr::TrainConfig t = upr::train_defaults(upr::SceneFamily::simple2d);
    if (config_json != nullptr) t = upr::io::train_config_from_json(upr::io::parse(config_json), t);
    if (out_dir != nullptr) t.out_dir = out_dir;
    upr::TrainResult r = upr::train(t);
    if (summary_json != nullptr) {
      const std::size_t window = std::min<std::size_t>(100, r.trace.size());
      double first = 0.0, last = 0.0;
      for (std::size_t i = 0; i < window; ++i) {
        first += r.trace[i].mean_loss;
        last += r.trace[r.trace.size() - window + i].mean_loss;
      }
      const upr::io::json s = {{"steps", r.trace.size()},
                               {"parameters", r.net.parameter_count()},
                               {"initial_window_mean_loss", first / static_cast<double>(window)},
                               {"final_window_mean_loss", last / static_cast<double>(window)},
                               {"window", window}};
      *summary_json = dup(s.dump());
    }
    *out = new upr_net{std::move(r.net)};
  });
}

upr_status upr_evaluate(const upr_net* net, const char* family, uint64_t seed, size_t count,
                        double collide_fraction, char** out_json) {
  return guard([&] {
    require(net, "net");
    require(out_json, "out_json");
    const upr::SceneFamily f = family_of(family);
    std::vector<upr::ProblemSample> problems;
    for (std::size_t i = 0; i < count; ++i) problems.push_back(upr::sample_problem(f, collide_fraction, seed, i));
    *out_json = dup(upr::io::to_json(upr::evaluate(net->net, problems, upr::family_defaults(f).cost)).dump());
  });
}

upr_status upr_refine(const upr_scene* scene, const upr_path* path, int steps, double step,
                      double safe_distance, upr_path** out) {
  return guard([&] {
    require(scene, "scene");
    require(path, "path");
    require(out, "out");
    upr::OptimizerConfig oc;
    oc.anchors = path->path.anchors.size();
    oc.degree = path->path.degree;
    oc.lr_fraction = upr::kRefineLrFraction;
    const upr::PlanResult r =
        upr::refine_collision_only(path->path, scene->scene, upr::CostParams{step, safe_distance}, steps, oc);
    *out = new upr_path{r.path};
  });
}

upr_status upr_benchmark(const char* config_json, const upr_net* net, const char* out_dir, char** report_json) {
  return guard([&] {
    require(config_json, "config_json");
    const upr::BenchmarkConfig c = upr::benchmark_config_from_json(upr::io::parse(config_json));
    const upr::BenchmarkReport r = upr::run_benchmark(c, net == nullptr ? nullptr : &net->net);
    if (out_dir != nullptr) upr::write_report(r, out_dir);
    if (report_json != nullptr) *report_json = dup(upr::report_json(r, false).dump());
  });
}

upr_status upr_calibrate(size_t resolution, char** out_json) {
  return guard([&] {
    require(out_json, "out_json");
    const upr::CalibrationResult r =
        upr::calibrate_chomp(upr::calibration_problem(), upr::family_defaults(upr::SceneFamily::simple2d).cost,
                             upr::CalibrationGrid::standard(), resolution);
    upr::io::json candidates = upr::io::json::array();
    for (const auto& c : r.candidates) {
      candidates.push_back({{"lambda", c.params.lambda},
                            {"epsilon", c.params.epsilon},
                            {"length", c.length},
                            {"collision_free", c.collision_free}});
    }
    const upr::io::json j = {{"lambda", r.params.lambda},
                             {"epsilon", r.params.epsilon},
                             {"reference_length", r.reference_length},
                             {"length", r.length},
                             {"candidates", candidates}};
    *out_json = dup(j.dump());
  });
}

upr_status upr_verify(uint64_t seed, size_t instances, size_t trials, char** report_json) {
  return guard([&] {
    require(report_json, "report_json");
    *report_json = dup(upr::to_json(upr::run_property_suite(seed, instances, trials)).dump());
  });
}

upr_status upr_gradcheck(uint64_t seed, size_t cost_configurations, size_t net_initializations,
                         char** report_json) {
  return guard([&] {
    require(report_json, "report_json");
    *report_json =
        dup(upr::to_json(upr::run_gradcheck_suite(seed, cost_configurations, net_initializations)).dump());
  });
}

upr_status upr_render_svg(const char* problem_json, const char* paths_json, size_t heatmap_resolution,
                          const char* heatmap_cost, const char* out_path) {
  return guard([&] {
    require(problem_json, "problem_json");
    require(out_path, "out_path");
    const upr::ProblemSample p = upr::io::problem_from_json(upr::io::parse(problem_json));
    std::vector<upr::LabeledPath> paths;
    if (paths_json != nullptr) {
      const upr::io::json arr = upr::io::parse(paths_json);
      if (!arr.is_array()) upr::fail(upr::Errc::parse, "paths must be a JSON array");
      for (const auto& item : arr) {
        try {
          paths.push_back({item.at("label").get<std::string>(), upr::io::path_from_json(item.at("path"))});
        } catch (const nlohmann::json::exception& e) {
          upr::fail(upr::Errc::parse, std::string("malformed labelled path: ") + e.what());
        }
      }
    }
    std::optional<upr::Raster> raster;
    if (heatmap_resolution > 0) {
      raster = upr::cost_heatmap(p.problem(), upr::family_defaults(upr::SceneFamily::simple2d).cost,
                                 upr::grid_over(p.scene, heatmap_resolution), cost_function_of(heatmap_cost));
    }
    upr::write_svg(upr::render_svg(p.problem(), paths, raster ? &*raster : nullptr), out_path);
  });
}

upr_status upr_heatmap_pgm(const char* problem_json, size_t resolution, const char* heatmap_cost,
                           const char* out_path) {
  return guard([&] {
    require(problem_json, "problem_json");
    require(out_path, "out_path");
    const upr::ProblemSample p = upr::io::problem_from_json(upr::io::parse(problem_json));
    const upr::Raster r = upr::cost_heatmap(p.problem(), upr::family_defaults(upr::SceneFamily::simple2d).cost,
                                            upr::grid_over(p.scene, resolution), cost_function_of(heatmap_cost));
    upr::write_pgm(r, out_path);
  });
}

}  // extern "C"
