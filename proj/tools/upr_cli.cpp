// Command-line front end; talks to the library only through the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "upr/upr.h"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct Failure {
  std::string message;
};

// Owns a string returned by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { upr_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

void check(upr_status s) {
  if (s != UPR_OK) throw Failure{std::string(upr_status_name(s)) + ": " + upr_last_error()};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{"cannot open '" + path + "'"};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw Failure{"cannot write '" + path.string() + "'"};
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Failure{"invalid JSON in " + what + ": " + e.what()};
  }
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;

  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }

  fs::path out_dir() const {
    std::string dir = out;
    if (dir.empty()) {
      const char* env = std::getenv("UPR_OUT_DIR");
      dir = env && *env ? env : ".";
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Failure{"cannot create '" + dir + "': " + ec.message()};
    return dir;
  }

  // Config file contents (or `{}`), with --seed written into "seed".
  json config_json() const {
    json j = config.empty() ? json::object() : parse_json(read_text(config), config);
    if (!j.is_object()) throw Failure{"config must be a JSON object"};
    if (seed) j["seed"] = *seed;
    return j;
  }
};

// A problem file holds one problem object or an array of them.
std::string select_problem(const std::string& path, std::size_t index) {
  const json j = parse_json(read_text(path), path);
  if (j.is_array()) {
    if (index >= j.size()) throw Failure{"problem index " + std::to_string(index) + " out of range"};
    return j[index].dump();
  }
  return j.dump();
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shortest collision-free path planning: generation, optimisation, training, benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--out", g.out, "Output directory (default: $UPR_OUT_DIR or .)");

  std::string family = "simple2d";
  std::size_t count = 10;
  double collide_fraction = 0.5;
  std::string problem_file;
  std::size_t index = 0;
  std::string checkpoint;
  std::string paths_file;
  std::size_t heatmap = 0;
  std::string heatmap_cost = "ours";
  std::string svg_name = "problem.svg";
  bool pgm = false;
  std::size_t trials = 1000;
  std::size_t instances = 20;
  std::size_t cost_configs = 50;
  std::size_t net_inits = 10;

  auto* gen = app.add_subcommand("gen", "Generate problems as JSON");
  gen->add_option("--family", family, "simple2d or boxworld3d");
  gen->add_option("--count", count, "Number of problems");
  gen->add_option("--collide-fraction", collide_fraction, "Box world: share of colliding straight lines");

  auto* plan = app.add_subcommand("plan", "Optimise one problem directly");
  plan->add_option("--problem", problem_file, "Problem JSON (object or array)")->required();
  plan->add_option("--index", index, "Entry of a problem array");

  auto* train = app.add_subcommand("train", "Train the path regression network");

  auto* eval = app.add_subcommand("eval", "Evaluate a trained network");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  eval->add_option("--family", family, "simple2d or boxworld3d");
  eval->add_option("--count", count, "Number of held-out problems");
  eval->add_option("--collide-fraction", collide_fraction, "Share of colliding straight lines");

  auto* bench = app.add_subcommand("bench", "Run the method comparison benchmark");
  bench->add_option("--checkpoint", checkpoint, "Checkpoint for the network methods");

  auto* render = app.add_subcommand("render", "Render a 2D problem as SVG (and optionally PGM)");
  render->add_option("--problem", problem_file, "Problem JSON (object or array)")->required();
  render->add_option("--index", index, "Entry of a problem array");
  render->add_option("--paths", paths_file, "JSON array of {label, path}");
  render->add_option("--heatmap", heatmap, "Background cost raster resolution (0: none)");
  render->add_option("--cost", heatmap_cost, "ours, exact, chomp or chomp:lambda,epsilon");
  render->add_option("--name", svg_name, "SVG file name");
  render->add_flag("--pgm", pgm, "Also write heatmap.pgm");

  auto* verify = app.add_subcommand("verify", "Oracle property suite");
  verify->add_option("--trials", trials, "Random paths per instance");
  verify->add_option("--instances", instances, "Generated instances");

  auto* gradcheck = app.add_subcommand("gradcheck", "Gradient checks against central differences");
  gradcheck->add_option("--configs", cost_configs, "Path-cost configurations");
  gradcheck->add_option("--inits", net_inits, "Network initialisations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (argc <= 1) {
      std::cerr << app.help();
    } else {
      app.exit(e);
    }
    return kUsage;
  }

  try {
    if (*gen) {
      Owned out;
      check(upr_generate(family.c_str(), g.seed_or(0), count, collide_fraction, &out.p));
      const fs::path file = g.out_dir() / "problems.json";
      write_text(file, parse_json(out.str(), "generated problems").dump(2) + "\n");
      std::cout << "wrote " << count << " problems to " << file.string() << '\n';
    } else if (*plan) {
      const std::string problem = select_problem(problem_file, index);
      json cj = g.config_json();
      if (g.seed) {
        cj.erase("seed");
        cj["optimizer"]["seed"] = *g.seed;
      }
      const std::string config = cj.empty() ? "" : cj.dump();
      Owned out;
      check(upr_plan(problem.c_str(), config.empty() ? nullptr : config.c_str(), &out.p));
      const json result = parse_json(out.str(), "plan result");
      write_text(g.out_dir() / "plan.json", result.dump(2) + "\n");
      print(result);
    } else if (*train) {
      const std::string config = g.config_json().dump();
      const std::string dir = g.out_dir().string();
      upr_net* net = nullptr;
      Owned summary;
      check(upr_train(config.c_str(), dir.c_str(), &net, &summary.p));
      upr_net_free(net);
      print(parse_json(summary.str(), "training summary"));
    } else if (*eval) {
      upr_net* net = nullptr;
      check(upr_net_load(checkpoint.c_str(), &net));
      Owned out;
      const upr_status s = upr_evaluate(net, family.c_str(), g.seed_or(1000), count, collide_fraction, &out.p);
      upr_net_free(net);
      check(s);
      const json metrics = parse_json(out.str(), "metrics");
      write_text(g.out_dir() / "eval.json", metrics.dump(2) + "\n");
      print(metrics);
    } else if (*bench) {
      json config = g.config_json();
      if (!checkpoint.empty()) config["checkpoint"] = checkpoint;
      const std::string text = config.dump();
      const std::string dir = g.out_dir().string();
      Owned out;
      check(upr_benchmark(text.c_str(), nullptr, dir.c_str(), &out.p));
      const json report = parse_json(out.str(), "report");
      for (const auto& row : report.at("rows")) {
        std::cout << row.at("method").get<std::string>() << ": success " << row.at("success_rate").get<double>()
                  << ", mean length ratio " << row.at("mean_length_ratio").get<double>() << '\n';
      }
      std::cout << "report written to " << dir << '\n';
    } else if (*render) {
      const std::string problem = select_problem(problem_file, index);
      const std::string paths = paths_file.empty() ? "" : read_text(paths_file);
      const fs::path dir = g.out_dir();
      check(upr_render_svg(problem.c_str(), paths.empty() ? nullptr : paths.c_str(), heatmap,
                           heatmap_cost.c_str(), (dir / svg_name).string().c_str()));
      if (pgm) {
        check(upr_heatmap_pgm(problem.c_str(), heatmap > 0 ? heatmap : 201, heatmap_cost.c_str(),
                              (dir / "heatmap.pgm").string().c_str()));
      }
      std::cout << "wrote " << (dir / svg_name).string() << '\n';
    } else if (*verify) {
      Owned out;
      check(upr_verify(g.seed_or(0), instances, trials, &out.p));
      const json report = parse_json(out.str(), "property report");
      write_text(g.out_dir() / "verify.json", report.dump(2) + "\n");
      const auto violations = report.at("mp_violations").get<std::size_t>() +
                              report.at("np_violations").get<std::size_t>() +
                              report.at("gp_violations").get<std::size_t>();
      json summary = report;
      summary.erase("instances_detail");
      print(summary);
      if (violations != 0) {
        std::cerr << "property violations found\n";
        return kRuntime;
      }
    } else if (*gradcheck) {
      Owned out;
      check(upr_gradcheck(g.seed_or(0), cost_configs, net_inits, &out.p));
      const json report = parse_json(out.str(), "gradient report");
      write_text(g.out_dir() / "gradcheck.json", report.dump(2) + "\n");
      print(report);
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return 0;
}
