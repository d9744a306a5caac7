#ifndef FOGGEN_H
#define FOGGEN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum FoggenStatus {
  FOGGEN_STATUS_OK = 0,
  FOGGEN_STATUS_NULL_POINTER = 1,
  FOGGEN_STATUS_INVALID_ARGUMENT = 2,
  FOGGEN_STATUS_DIMENSION_MISMATCH = 3,
  FOGGEN_STATUS_IO = 4,
  FOGGEN_STATUS_FORMAT = 5,
  // Depth completion could not produce a complete map.
  FOGGEN_STATUS_DEPTH = 6,
  FOGGEN_STATUS_BUFFER_TOO_SMALL = 7,
  FOGGEN_STATUS_PANIC = 8,
} FoggenStatus;

// Opaque scalar field with validity mask.
typedef struct FoggenField FoggenField;

// Opaque RGB image.
typedef struct FoggenImage FoggenImage;

// Pipeline parameters. Start from [`foggen_params_default`].
typedef struct FoggenParams {
  double epsilon;
  size_t k_hat;
  double m;
  size_t min_valid;
  double valid_fraction;
  size_t ransac_max_iters;
  double ransac_p;
  double theta_factor;
  double theta_hat;
  double depth_floor;
  size_t gf_radius;
  double gf_mu;
} FoggenParams;

// Pinhole intrinsics of the left camera, pixels, and the baseline, meters.
typedef struct FoggenCameraRig {
  double fx;
  double fy;
  double cx;
  double cy;
  double baseline;
} FoggenCameraRig;

// Outputs of [`foggen_simulate`]. Handles are owned by the caller.
typedef struct FoggenSimulation {
  struct FoggenImage *foggy;
  struct FoggenField *transmission;
  struct FoggenField *depth;
  struct FoggenField *distance;
  double light[3];
  // Pixel `[u, v]` the atmospheric light was read from.
  size_t light_pixel[2];
} FoggenSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *foggen_version(void);

// Message of the last failure on this thread, or null if none. The pointer
// stays valid until the next failing call on the same thread.
const char *foggen_last_error(void);

// Short static name of a status code; unknown codes get a generic name.
const char *foggen_status_name(int32_t status);

struct FoggenParams foggen_params_default(void);

// Checks every parameter against its admissible range.
//
// # Safety
// `params` must be null or point to a valid `FoggenParams`.
enum FoggenStatus foggen_params_validate(const struct FoggenParams *params);

// Reads a camera JSON file.
//
// # Safety
// `path` must be a NUL-terminated string, `out` writable.
enum FoggenStatus foggen_camera_load(const char *path, struct FoggenCameraRig *out);

// Creates an image from `3 * width * height` interleaved RGB values.
//
// # Safety
// `data` must point to that many readable doubles, `out` must be writable.
enum FoggenStatus foggen_image_new(size_t width,
                                   size_t height,
                                   const double *data,
                                   struct FoggenImage **out);

// Reads an 8- or 16-bit RGB PNG.
//
// # Safety
// `path` must be a NUL-terminated string, `out` writable.
enum FoggenStatus foggen_image_load_png(const char *path, struct FoggenImage **out);

// Writes an 8-bit RGB PNG.
//
// # Safety
// `image` must be a live handle, `path` a NUL-terminated string.
enum FoggenStatus foggen_image_save_png(const struct FoggenImage *image, const char *path);

// Width in pixels, 0 for a null handle.
//
// # Safety
// `image` must be null or a live handle.
size_t foggen_image_width(const struct FoggenImage *image);

// Height in pixels, 0 for a null handle.
//
// # Safety
// `image` must be null or a live handle.
size_t foggen_image_height(const struct FoggenImage *image);

// Copies the `3 * width * height` interleaved values into `buf`.
//
// # Safety
// `image` must be a live handle and `buf` writable for `len` doubles.
enum FoggenStatus foggen_image_copy_data(const struct FoggenImage *image, double *buf, size_t len);

// Releases an image. Null is ignored.
//
// # Safety
// `image` must be null or a handle not yet freed.
void foggen_image_free(struct FoggenImage *image);

// Creates a field from `width * height` values. `valid` may be null, in
// which case every pixel is valid; otherwise a nonzero byte marks a valid
// pixel.
//
// # Safety
// `values` (and `valid` if not null) must point to `width * height`
// readable elements, `out` must be writable.
enum FoggenStatus foggen_field_new(size_t width,
                                   size_t height,
                                   const double *values,
                                   const uint8_t *valid,
                                   struct FoggenField **out);

// Reads a 16-bit disparity PNG; zero pixels become invalid.
//
// # Safety
// `path` must be a NUL-terminated string, `out` writable.
enum FoggenStatus foggen_field_load_disparity_png(const char *path, struct FoggenField **out);

// Writes a field as a 16-bit PNG scaled by 65535, for transmission maps.
//
// # Safety
// `field` must be a live handle, `path` a NUL-terminated string.
enum FoggenStatus foggen_field_save_transmission_png(const struct FoggenField *field,
                                                     const char *path);

// Writes a field in meters as a 16-bit PNG scaled by 256.
//
// # Safety
// `field` must be a live handle, `path` a NUL-terminated string.
enum FoggenStatus foggen_field_save_metric_png(const struct FoggenField *field, const char *path);

// # Safety
// `field` must be null or a live handle.
size_t foggen_field_width(const struct FoggenField *field);

// # Safety
// `field` must be null or a live handle.
size_t foggen_field_height(const struct FoggenField *field);

// Copies the `width * height` values into `buf`. Invalid pixels carry
// whatever value is stored; check the mask.
//
// # Safety
// `field` must be a live handle and `buf` writable for `len` doubles.
enum FoggenStatus foggen_field_copy_values(const struct FoggenField *field,
                                           double *buf,
                                           size_t len);

// Copies the validity mask, one byte per pixel, 1 for valid.
//
// # Safety
// `field` must be a live handle and `buf` writable for `len` bytes.
enum FoggenStatus foggen_field_copy_valid(const struct FoggenField *field,
                                          uint8_t *buf,
                                          size_t len);

// Releases a field. Null is ignored.
//
// # Safety
// `field` must be null or a handle not yet freed.
void foggen_field_free(struct FoggenField *field);

// Runs the full pipeline on a rectified stereo pair. `params` may be null
// for the defaults. On success every handle in `out` is set and owned by
// the caller; on failure `out` is left untouched.
//
// # Safety
// Handles must be live, `rig` readable, `params` null or readable, `out`
// writable.
enum FoggenStatus foggen_simulate(const struct FoggenImage *left,
                                  const struct FoggenImage *right,
                                  const struct FoggenField *disparity,
                                  const struct FoggenCameraRig *rig,
                                  double beta,
                                  const struct FoggenParams *params,
                                  uint64_t seed,
                                  struct FoggenSimulation *out);

// Releases every handle in a simulation result and nulls them.
//
// # Safety
// `sim` must be null or point to a result whose handles are not yet freed.
void foggen_simulation_free(struct FoggenSimulation *sim);

// Meteorological optical range, meters, for attenuation `beta` in 1/m.
//
// # Safety
// `out` must be writable.
enum FoggenStatus foggen_mor_from_beta(double beta, double *out);

// Agreement coefficient of `m` raters over `t` items, from the row-major
// `t * t` matrix of pairwise preference counts.
//
// # Safety
// `counts` must point to `t * t` readable values, `out` must be writable.
enum FoggenStatus foggen_agreement(uint64_t m, size_t t, const uint64_t *counts, double *out);

// Kendall rank correlation, tau-b, of two length-`n` sequences.
//
// # Safety
// `a` and `b` must point to `n` readable doubles, `out` must be writable.
enum FoggenStatus foggen_kendall_tau(const double *a, const double *b, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOGGEN_H */
