#pragma once

#include <string>

#include <json.hpp>

#include "upr/cost.hpp"
#include "upr/geom.hpp"
#include "upr/optimizer.hpp"
#include "upr/oracle.hpp"
#include "upr/regressor.hpp"
#include "upr/scenegen.hpp"
#include "upr/spline.hpp"

// JSON forms of the public types. Readers throw Errc::parse on malformed
// input and the type's own validation error on well-formed but invalid data.
namespace upr::io {

using json = nlohmann::ordered_json;

json to_json(const Point& p);
Point point_from_json(const json& j);

json to_json(const Scene& scene);
Scene scene_from_json(const json& j);

json to_json(const SplinePath& path);
SplinePath path_from_json(const json& j);

json to_json(const ProblemSample& sample);
ProblemSample problem_from_json(const json& j);

json to_json(const CostParams& params);
CostParams cost_params_from_json(const json& j);

json to_json(const ChompParams& params);
ChompParams chomp_params_from_json(const json& j);

json to_json(const CostBreakdown& b);
json to_json(const PlanResult& r);
json to_json(const PropertyReport& r);
json to_json(const EvalMetrics& m);
// Values as a row-major matrix, rows along x.
json to_json(const Raster& r);

// Missing keys keep `base` values.
OptimizerConfig optimizer_config_from_json(const json& j, OptimizerConfig base);
TrainConfig train_config_from_json(const json& j, TrainConfig base);

json parse(const std::string& text);
json read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace upr::io
