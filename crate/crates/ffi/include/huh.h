#ifndef HUH_H
#define HUH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum HuhStatus {
  HUH_STATUS_OK = 0,
  HUH_STATUS_NULL_POINTER = 1,
  HUH_STATUS_INVALID_UTF8 = 2,
  HUH_STATUS_INVALID_ARGUMENT = 3,
  HUH_STATUS_PARSE_ERROR = 4,
  HUH_STATUS_IO_ERROR = 5,
  HUH_STATUS_BUNDLE_ERROR = 6,
  HUH_STATUS_PROVIDER_ERROR = 7,
  HUH_STATUS_PANIC = 8,
} HuhStatus;

/**
 * Explanation bundle.
 */
typedef struct HuhBundle HuhBundle;

/**
 * Parsed transcript.
 */
typedef struct HuhTranscript HuhTranscript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Owned by the
 * library and valid until the next failing call on the same thread.
 */
const char *huh_last_error(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void huh_string_free(char *s);

/**
 * Parse `len` bytes of transcript. `format` is "srt", "vtt" or "json";
 * `video_id` and `language` may be NULL for the defaults.
 *
 * # Safety
 * `data` must point to `len` readable bytes; string arguments must be
 * NUL-terminated; `out` must be writable.
 */
enum HuhStatus huh_transcript_parse(const uint8_t *data,
                                    size_t len,
                                    const char *format,
                                    const char *video_id,
                                    const char *language,
                                    struct HuhTranscript **out);

/**
 * Apply pause-based punctuation in place. Already punctuated transcripts
 * are left unchanged.
 *
 * # Safety
 * `t` must be a live transcript handle.
 */
enum HuhStatus huh_transcript_punctuate(struct HuhTranscript *t, uint64_t gap_ms);

/**
 * Number of cues, or 0 for NULL.
 *
 * # Safety
 * `t` must be NULL or a live transcript handle.
 */
size_t huh_transcript_cue_count(const struct HuhTranscript *t);

/**
 * Duration in milliseconds, or 0 for NULL.
 *
 * # Safety
 * `t` must be NULL or a live transcript handle.
 */
uint64_t huh_transcript_duration_ms(const struct HuhTranscript *t);

/**
 * Serialize as cue JSON into a new string.
 *
 * # Safety
 * `t` must be a live transcript handle and `out` writable.
 */
enum HuhStatus huh_transcript_to_cue_json(const struct HuhTranscript *t, char **out);

/**
 * # Safety
 * `t` must be NULL or a handle from this library not yet freed.
 */
void huh_transcript_free(struct HuhTranscript *t);

/**
 * Load and validate a bundle file.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
enum HuhStatus huh_bundle_load(const char *path, struct HuhBundle **out);

/**
 * Parse and validate a bundle from JSON text.
 *
 * # Safety
 * `json` must be NUL-terminated and `out` writable.
 */
enum HuhStatus huh_bundle_from_json(const char *json, struct HuhBundle **out);

/**
 * Generate a bundle with the deterministic mock provider. `to_ms < 0`
 * covers the whole transcript; `created_at` may be NULL.
 *
 * # Safety
 * `t` must be a live transcript handle; `out` writable.
 */
enum HuhStatus huh_bundle_generate_mock(const struct HuhTranscript *t,
                                        uint64_t interval_ms,
                                        uint64_t from_ms,
                                        int64_t to_ms,
                                        const char *created_at,
                                        struct HuhBundle **out);

/**
 * Write the bundle as pretty JSON.
 *
 * # Safety
 * `b` must be a live bundle handle; `path` NUL-terminated.
 */
enum HuhStatus huh_bundle_save(const struct HuhBundle *b, const char *path);

/**
 * Slots per level, or 0 for NULL.
 *
 * # Safety
 * `b` must be NULL or a live bundle handle.
 */
size_t huh_bundle_slot_count(const struct HuhBundle *b);

/**
 * Lookup result for a pause at `t_ms` as a JSON object string.
 *
 * # Safety
 * `b` must be a live bundle handle and `out` writable.
 */
enum HuhStatus huh_bundle_lookup_json(const struct HuhBundle *b,
                                      uint64_t t_ms,
                                      uint8_t level,
                                      char **out);

/**
 * Whether an explanation exists for a pause at `t_ms`.
 *
 * # Safety
 * `b` must be a live bundle handle and `out` writable.
 */
enum HuhStatus huh_bundle_is_available(const struct HuhBundle *b,
                                       uint64_t t_ms,
                                       uint8_t level,
                                       bool *out);

/**
 * Write the static export (manifest plus slot files) under `dir`.
 *
 * # Safety
 * `b` must be a live bundle handle; `dir` NUL-terminated.
 */
enum HuhStatus huh_bundle_export(const struct HuhBundle *b, const char *dir);

/**
 * # Safety
 * `b` must be NULL or a handle from this library not yet freed.
 */
void huh_bundle_free(struct HuhBundle *b);

/**
 * kg CO2e for the given token counts. A factor of 0 selects the default.
 *
 * # Safety
 * `out_kg` must be writable.
 */
enum HuhStatus huh_emissions_estimate(uint64_t prompt_tokens,
                                      uint64_t completion_tokens,
                                      double factor_kg_per_token,
                                      double *out_kg);

/**
 * Default kg CO2e per token.
 */
double huh_default_factor(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HUH_H */
