#ifndef MVS_H
#define MVS_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MvsStatus {
  MVS_STATUS_OK = 0,
  MVS_STATUS_NULL_POINTER = 1,
  MVS_STATUS_INVALID_ARGUMENT = 2,
  MVS_STATUS_SHAPE_MISMATCH = 3,
  MVS_STATUS_FORMAT = 4,
  MVS_STATUS_IO = 5,
  MVS_STATUS_NUMERIC = 6,
  MVS_STATUS_PANIC = 7,
} MvsStatus;

typedef struct MvsDepthMap MvsDepthMap;

typedef struct MvsPointCloud MvsPointCloud;

typedef struct MvsUflParams MvsUflParams;

/**
 * Accuracy, completeness and their mean.
 */
typedef struct MvsMetrics {
  double accuracy;
  double completeness;
  double overall;
} MvsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or null if none. The
 * string stays valid until the next failing call on the same thread.
 */
const char *mvs_last_error(void);

/**
 * Loss parameters with the default values.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MvsStatus mvs_ufl_params_default(struct MvsUflParams **out);

/**
 * Loss parameters parsed from a TOML `[loss]`-style table (keys at top
 * level); missing keys take their defaults.
 *
 * # Safety
 * `toml` must be a nul-terminated string and `out` valid for writes.
 */
enum MvsStatus mvs_ufl_params_from_toml(const char *toml, struct MvsUflParams **out);

/**
 * # Safety
 * `params` must come from an `mvs_ufl_params_*` constructor or be null.
 */
void mvs_ufl_params_free(struct MvsUflParams *params);

/**
 * Pointwise unified focal loss at one cascade stage.
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
enum MvsStatus mvs_ufl(const struct MvsUflParams *params,
                       double u,
                       double q,
                       double q_pos,
                       size_t stage,
                       double *out);

/**
 * Derivative of [`mvs_ufl`] with respect to `u`.
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
enum MvsStatus mvs_ufl_grad(const struct MvsUflParams *params,
                            double u,
                            double q,
                            double q_pos,
                            size_t stage,
                            double *out);

/**
 * Range-limiting function with base `base` onto `[lo, hi)`, at `x >= 0`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MvsStatus mvs_dedicated_s(double base, double lo, double hi, double x, double *out);

/**
 * Unity labels for a ground-truth depth map.
 *
 * `gt` holds `height·width` depths (non-positive means invalid),
 * `hypotheses` holds `planes·height·width` depths plane-major. Writes
 * `planes·height·width` values to `out_values` and one 0/1 byte per pixel
 * to `out_mask`.
 *
 * # Safety
 * Buffers must have the stated lengths.
 */
enum MvsStatus mvs_generate_unity(const float *gt,
                                  size_t height,
                                  size_t width,
                                  const double *hypotheses_ptr,
                                  size_t planes,
                                  double *out_values,
                                  uint8_t *out_mask);

/**
 * Depth and confidence from a unity volume (same layout as
 * [`mvs_generate_unity`]); invalid pixels get depth 0 and mask 0.
 *
 * # Safety
 * Buffers must have the stated lengths.
 */
enum MvsStatus mvs_regress_unity(const double *values,
                                 const uint8_t *mask,
                                 size_t planes,
                                 size_t height,
                                 size_t width,
                                 const double *hypotheses_ptr,
                                 float *out_depth,
                                 float *out_confidence,
                                 uint8_t *out_mask);

/**
 * Depth map from `height·width` values; non-positive entries are invalid.
 *
 * # Safety
 * `values` must hold `height·width` floats and `out` be valid for writes.
 */
enum MvsStatus mvs_depth_map_new(const float *values,
                                 size_t height,
                                 size_t width,
                                 struct MvsDepthMap **out);

/**
 * # Safety
 * `path` must be a nul-terminated string and `out` valid for writes.
 */
enum MvsStatus mvs_depth_map_read_pfm(const char *path_ptr, struct MvsDepthMap **out);

/**
 * # Safety
 * `map` must be a live handle and `path` a nul-terminated string.
 */
enum MvsStatus mvs_depth_map_write_pfm(const struct MvsDepthMap *map, const char *path_ptr);

/**
 * # Safety
 * `map` must be a live handle; `height` and `width` valid for writes.
 */
enum MvsStatus mvs_depth_map_dims(const struct MvsDepthMap *map, size_t *height, size_t *width);

/**
 * Copy the `height·width` depth values (0 where invalid) into `out`.
 *
 * # Safety
 * `map` must be a live handle and `out` hold `len` floats.
 */
enum MvsStatus mvs_depth_map_values(const struct MvsDepthMap *map, float *out, size_t len);

/**
 * # Safety
 * `map` must come from an `mvs_depth_map_*` constructor or be null.
 */
void mvs_depth_map_free(struct MvsDepthMap *map);

/**
 * Cloud from `len` points (`3·len` coordinates); colours default to white.
 *
 * # Safety
 * `xyz` must hold `3·len` doubles and `out` be valid for writes.
 */
enum MvsStatus mvs_point_cloud_new(const double *xyz, size_t len, struct MvsPointCloud **out);

/**
 * # Safety
 * `path` must be a nul-terminated string and `out` valid for writes.
 */
enum MvsStatus mvs_point_cloud_read_ply(const char *path_ptr, struct MvsPointCloud **out);

/**
 * # Safety
 * `cloud` must be a live handle and `out` valid for writes.
 */
enum MvsStatus mvs_point_cloud_len(const struct MvsPointCloud *cloud, size_t *out);

/**
 * Copy `3·len` coordinates into `out`.
 *
 * # Safety
 * `cloud` must be a live handle and `out` hold `3·len` doubles where `len`
 * is the cloud size.
 */
enum MvsStatus mvs_point_cloud_points(const struct MvsPointCloud *cloud, double *out, size_t len);

/**
 * # Safety
 * `cloud` must come from an `mvs_point_cloud_*` constructor or be null.
 */
void mvs_point_cloud_free(struct MvsPointCloud *cloud);

/**
 * Capped nearest-neighbour accuracy and completeness.
 *
 * # Safety
 * Both clouds must be live handles and `out` valid for writes.
 */
enum MvsStatus mvs_evaluate(const struct MvsPointCloud *recon,
                            const struct MvsPointCloud *gt,
                            double dist_cap,
                            struct MvsMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MVS_H */
