#ifndef IRISCT_H
#define IRISCT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IrisPayloadKind {
  IRIS_PAYLOAD_KIND_REALS = 0,
  IRIS_PAYLOAD_KIND_BITS = 1,
  IRIS_PAYLOAD_KIND_TRITS = 2,
  IRIS_PAYLOAD_KIND_TRITS_REALS = 3,
} IrisPayloadKind;

typedef enum IrisStatus {
  IRIS_STATUS_OK = 0,
  IRIS_STATUS_NULL_POINTER = 1,
  IRIS_STATUS_INVALID_ARGUMENT = 2,
  IRIS_STATUS_FILE_NOT_FOUND = 3,
  IRIS_STATUS_IO = 4,
  IRIS_STATUS_UNSUPPORTED_FORMAT = 5,
  IRIS_STATUS_CORRUPT_IMAGE = 6,
  IRIS_STATUS_SEGMENTATION = 7,
  IRIS_STATUS_DIM_MISMATCH = 8,
  IRIS_STATUS_EMPTY_MASK = 9,
  IRIS_STATUS_PARSE = 10,
  IRIS_STATUS_BUFFER_TOO_SMALL = 11,
  IRIS_STATUS_PANIC = 12,
  IRIS_STATUS_OTHER = 13,
} IrisStatus;

/**
 * Configuration plus fitted projection bases.
 */
typedef struct IrisCtx IrisCtx;

typedef struct IrisImage IrisImage;

typedef struct IrisTemplate IrisTemplate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *iris_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *iris_version(void);

/**
 * New context with default settings.
 */
struct IrisCtx *iris_ctx_new(void);

/**
 * # Safety
 * `ctx` must come from [`iris_ctx_new`] and not be used afterwards.
 */
void iris_ctx_free(struct IrisCtx *ctx);

/**
 * Set one configuration key (see `irisct keys`).
 *
 * # Safety
 * `ctx` must be a live context; `key` and `value` NUL-terminated strings.
 */
enum IrisStatus iris_ctx_set(struct IrisCtx *ctx, const char *key, const char *value);

/**
 * Load a PCA or ICA basis written by `irisct fit-basis`.
 *
 * # Safety
 * `ctx` must be a live context; `path` a NUL-terminated string.
 */
enum IrisStatus iris_ctx_load_basis(struct IrisCtx *ctx, const char *path);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum IrisStatus iris_image_load(const char *path, struct IrisImage **out);

/**
 * Copy an 8-bit gray image, row-major, `width * height` bytes.
 *
 * # Safety
 * `pixels` must point to `width * height` readable bytes; `out` must be
 * writable.
 */
enum IrisStatus iris_image_from_gray(size_t width,
                                     size_t height,
                                     const uint8_t *pixels,
                                     struct IrisImage **out);

/**
 * # Safety
 * `img` must come from an image constructor and not be used afterwards.
 */
void iris_image_free(struct IrisImage *img);

/**
 * Segment, normalise and extract one template. `method` is a tag such as
 * `"BINARY"` or `"nlac"`.
 *
 * # Safety
 * `ctx` and `img` must be live handles; `method` NUL-terminated; `out`
 * writable.
 */
enum IrisStatus iris_extract(const struct IrisCtx *ctx,
                             const struct IrisImage *img,
                             const char *method,
                             struct IrisTemplate **out);

/**
 * # Safety
 * `t` must come from this library and not be used afterwards.
 */
void iris_template_free(struct IrisTemplate *t);

/**
 * Number of elements, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live template.
 */
size_t iris_template_len(const struct IrisTemplate *t);

/**
 * # Safety
 * `t` must be a live template; `out` writable.
 */
enum IrisStatus iris_template_kind(const struct IrisTemplate *t, enum IrisPayloadKind *out);

/**
 * Copy the template as reals (bits 0/1, trits −1/0/1) into `buf`.
 * `written` receives the element count; if `cap` is too small nothing is
 * copied and `BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `buf` must hold `cap` writable doubles; `written` must be writable.
 */
enum IrisStatus iris_template_copy(const struct IrisTemplate *t,
                                   double *buf,
                                   size_t cap,
                                   size_t *written);

/**
 * Serialise as one template-store line; free with [`iris_string_free`].
 *
 * # Safety
 * `t` must be a live template; `subject`, `sample` NUL-terminated; `out`
 * writable.
 */
enum IrisStatus iris_template_to_record(const struct IrisTemplate *t,
                                        const char *subject,
                                        const char *sample,
                                        char **out);

/**
 * Parse one template-store line.
 *
 * # Safety
 * `line` must be NUL-terminated; `out` writable.
 */
enum IrisStatus iris_template_from_record(const char *line, struct IrisTemplate **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void iris_string_free(char *s);

/**
 * Matcher distance between two templates of the same method (an NLAC
 * template may be compared with a BINARY one).
 *
 * # Safety
 * `a`, `b` must be live templates; `out` writable.
 */
enum IrisStatus iris_distance(const struct IrisTemplate *a,
                              const struct IrisTemplate *b,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRISCT_H */
