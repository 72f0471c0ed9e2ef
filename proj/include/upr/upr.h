#ifndef UPR_UPR_H
#define UPR_UPR_H

/* C interface to the planning library. Structured data crosses the boundary
 * as JSON text. Strings returned through `char**` belong to the caller and
 * are released with upr_string_free. On failure a function returns a
 * non-zero status and upr_last_error() describes it (per thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UPR_API __declspec(dllexport)
#else
#define UPR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum upr_status {
  UPR_OK = 0,
  UPR_E_INVALID_ARGUMENT = 1,
  UPR_E_DOMAIN = 2,
  UPR_E_EMPTY_SCENE = 3,
  UPR_E_NUMERIC = 4,
  UPR_E_NUMERIC_DOMAIN = 5,
  UPR_E_CAPACITY = 6,
  UPR_E_GENERATION = 7,
  UPR_E_CONFIG = 8,
  UPR_E_IO = 9,
  UPR_E_CALIBRATION = 10,
  UPR_E_UNSUPPORTED = 11,
  UPR_E_CONTRACT = 12,
  UPR_E_PARSE = 13,
  UPR_E_INTERNAL = 100
} upr_status;

typedef struct upr_scene upr_scene;
typedef struct upr_path upr_path;
typedef struct upr_net upr_net;

typedef struct upr_breakdown {
  double length;
  double exact_collision;
  double smooth_collision;
  double total_smooth;
  int collides;
} upr_breakdown;

UPR_API const char* upr_version(void);
UPR_API const char* upr_last_error(void);
UPR_API const char* upr_status_name(upr_status status);
UPR_API void upr_string_free(char* s);

/* Scenes and paths. */
UPR_API upr_status upr_scene_from_json(const char* json, upr_scene** out);
UPR_API upr_status upr_scene_to_json(const upr_scene* scene, char** out);
UPR_API int upr_scene_dim(const upr_scene* scene);
UPR_API size_t upr_scene_obstacle_count(const upr_scene* scene);
UPR_API void upr_scene_free(upr_scene* scene);

UPR_API upr_status upr_path_from_json(const char* json, upr_path** out);
UPR_API upr_status upr_path_to_json(const upr_path* path, char** out);
UPR_API void upr_path_free(upr_path* path);

/* Cost of `path` in `scene` with sampling step `step` and safe distance
 * `safe_distance`. */
UPR_API upr_status upr_total_loss(const upr_scene* scene, const upr_path* path, double step,
                                  double safe_distance, upr_breakdown* out);

/* Problem generation: family is "simple2d" or "boxworld3d". Returns a JSON
 * array of problems. */
UPR_API upr_status upr_generate(const char* family, uint64_t seed, size_t count,
                                double collide_fraction, char** out_json);

/* Direct optimisation of one problem (JSON problem object). `config_json`
 * may be NULL; it holds optional "cost" and "optimizer" objects overriding
 * the family presets. Returns a plan result object. */
UPR_API upr_status upr_plan(const char* problem_json, const char* config_json, char** out_json);

/* Networks. */
UPR_API upr_status upr_net_create(const char* family, uint64_t seed, upr_net** out);
UPR_API upr_status upr_net_load(const char* path, upr_net** out);
UPR_API upr_status upr_net_save(const upr_net* net, const char* path);
UPR_API size_t upr_net_parameter_count(const upr_net* net);
UPR_API upr_status upr_net_forward(const upr_net* net, const char* problem_json, char** path_json);
UPR_API void upr_net_free(upr_net* net);

/* Trains from the family preset updated by `config_json` (may be NULL).
 * Writes checkpoint.json and loss_trace.csv into `out_dir` when non-NULL.
 * `summary_json` (may be NULL) receives first and last loss statistics. */
UPR_API upr_status upr_train(const char* config_json, const char* out_dir, upr_net** out,
                             char** summary_json);

/* Success rate, length ratio and inference time on `count` problems drawn
 * from the family's training distribution with the given seed. */
UPR_API upr_status upr_evaluate(const upr_net* net, const char* family, uint64_t seed,
                                size_t count, double collide_fraction, char** out_json);

/* Collision-only refinement of a path for `steps` steps. */
UPR_API upr_status upr_refine(const upr_scene* scene, const upr_path* path, int steps,
                              double step, double safe_distance, upr_path** out);

/* Benchmark; `net` (may be NULL) serves the network methods. Writes
 * report.json and records.csv into `out_dir` when non-NULL. Returns the
 * report without timing fields. */
UPR_API upr_status upr_benchmark(const char* config_json, const upr_net* net, const char* out_dir,
                                 char** report_json);

UPR_API upr_status upr_calibrate(size_t resolution, char** out_json);

/* Oracle property suite and gradient checks; reports as JSON. */
UPR_API upr_status upr_verify(uint64_t seed, size_t instances, size_t trials, char** report_json);
UPR_API upr_status upr_gradcheck(uint64_t seed, size_t cost_configurations,
                                 size_t net_initializations, char** report_json);

/* SVG of a 2D problem with labelled paths (JSON array of
 * {"label": ..., "path": {...}}; may be NULL). A positive `heatmap_resolution`
 * adds the one-anchor cost raster as background; `heatmap_cost` is "ours" or
 * "chomp". */
UPR_API upr_status upr_render_svg(const char* problem_json, const char* paths_json,
                                  size_t heatmap_resolution, const char* heatmap_cost,
                                  const char* out_path);

/* One-anchor cost raster of a 2D problem as PGM. */
UPR_API upr_status upr_heatmap_pgm(const char* problem_json, size_t resolution,
                                   const char* heatmap_cost, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* UPR_UPR_H */
