/* facade3d: single-photo facade rectification and city-block modeling.
 *
 * C API of the shared library. All functions return f3d_status; on failure
 * f3d_last_error() describes what went wrong (thread-local). Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching *_free function.
 */
#ifndef FACADE3D_H
#define FACADE3D_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum f3d_status {
  F3D_OK = 0,
  F3D_FATAL = 1,           /* unusable input (manifest, file, argument) */
  F3D_PARTIAL = 2,         /* pipeline finished but some facades failed */
  F3D_UNREADABLE = 3,
  F3D_UNSUPPORTED = 4,
  F3D_DEGENERATE = 5,      /* degenerate trimap/quad/geometry */
  F3D_NO_EVIDENCE = 6,     /* no usable segments or candidates */
  F3D_NUMERIC = 7,         /* solver diverged / unstable computation */
  F3D_WRITE_FAILURE = 8,
  F3D_INVALID_ARGUMENT = 9
} f3d_status;

const char* f3d_version(void);
/* Message for the most recent failure on this thread. */
const char* f3d_last_error(void);

/* ---- images: 8-bit grayscale with an optional alpha plane ---- */

typedef struct f3d_image f3d_image;

f3d_status f3d_image_load(const char* path, f3d_image** out);
f3d_status f3d_image_create(int32_t width, int32_t height, const uint8_t* gray_or_null,
                            f3d_image** out);
int32_t f3d_image_width(const f3d_image* img);
int32_t f3d_image_height(const f3d_image* img);
/* Row-major pixel plane, width*height bytes. */
const uint8_t* f3d_image_pixels(const f3d_image* img);
uint8_t* f3d_image_pixels_mut(f3d_image* img);
/* NULL when the image has no alpha plane. */
const uint8_t* f3d_image_alpha(const f3d_image* img);
f3d_status f3d_image_set_alpha(f3d_image* img, const uint8_t* alpha);
/* Writes gray PNG, or gray+alpha when an alpha plane is present. */
f3d_status f3d_image_save_png(const f3d_image* img, const char* path);
void f3d_image_free(f3d_image* img);

/* ---- stage entry points ----
 * config_json may be NULL for defaults; keys follow the manifest "config"
 * schema (see README).
 */

/* Probability mask (pixels/255) -> trimap -> matte, returned as an 8-bit
 * alpha plane image (255 = foreground). */
f3d_status f3d_matte_refine(const f3d_image* image, const f3d_image* prob_mask,
                            const char* config_json, f3d_image** matte_out);

/* Straight-segment detection; mask may be NULL. Returns a JSON array of
 * {a, b, support_count} through segments_json_out (free with f3d_string_free). */
f3d_status f3d_detect_segments(const f3d_image* image, const f3d_image* mask_or_null,
                               uint64_t seed, const char* config_json, char** segments_json_out);

/* Rectifies one facade given its matte (alpha plane of matte_image, or its
 * gray plane when no alpha is present). Returns the rectified gray+alpha
 * texture and an info JSON {aspect, world_width, world_height, focal,
 * approximate_focal} (width_m scales the world dimensions). */
f3d_status f3d_rectify_facade(const f3d_image* image, const f3d_image* matte_image,
                              double width_m, const char* config_json, f3d_image** rectified_out,
                              char** info_json_out);

/* Fills mask pixels (value > 127) through the low-memory tiler.
 * backend: "diffusion" or "patch". metrics_json_out (optional) receives
 * {l1_mean, l2_mean, wall_time_ms, slice_count, peak_slice_area}; the losses
 * compare against the input image over the masked region. */
f3d_status f3d_inpaint(const f3d_image* image, const f3d_image* mask, const char* backend,
                       uint64_t seed, const char* config_json, f3d_image** out,
                       char** metrics_json_out);

/* ---- full pipeline ---- */

typedef struct f3d_run_options {
  const char* manifest_path;
  const char* out_dir;
  int debug;              /* dump per-stage artifacts */
  uint64_t seed;
  const char* backend;    /* "diffusion" (default) or "patch" */
  int no_dedup;           /* disable vanishing-point search-space reduction */
  int metrics;            /* instrument VP reduction and stage timings */
  int workers;            /* 0 = hardware concurrency */
} f3d_run_options;

/* Runs the manifest end to end. Returns F3D_OK, F3D_PARTIAL when some facades
 * failed (details in the report), or F3D_FATAL on manifest errors. The full
 * run report JSON is returned through report_json_out when non-NULL. */
f3d_status f3d_run_pipeline(const f3d_run_options* options, char** report_json_out);

void f3d_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* FACADE3D_H */
