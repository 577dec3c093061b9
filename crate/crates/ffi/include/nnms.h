#ifndef NNMS_H
#define NNMS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum NnmsStatus {
  NNMS_STATUS_OK = 0,
  NNMS_STATUS_NULL_POINTER = 1,
  NNMS_STATUS_INVALID_ARGUMENT = 2,
  NNMS_STATUS_IO = 3,
  NNMS_STATUS_PARSE = 4,
  NNMS_STATUS_LENGTH_MISMATCH = 5,
  NNMS_STATUS_DIVERGENCE = 6,
  NNMS_STATUS_WEIGHTS = 7,
  NNMS_STATUS_UTF8 = 8,
  NNMS_STATUS_PANIC = 9,
} NnmsStatus;

/**
 * A parity-check code and its Tanner graph.
 */
typedef struct NnmsCode NnmsCode;

/**
 * A decoder bound to one code, with its own scratch buffers. Not safe to
 * use from two threads at once.
 */
typedef struct NnmsDecoder NnmsDecoder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *nnms_last_error_message(void);

/**
 * Static description of a status code.
 */
const char *nnms_status_string(enum NnmsStatus status);

/**
 * Library version, NUL-terminated and static.
 */
const char *nnms_version(void);

/**
 * Loads a code from an alist file, or from a JSON sidecar naming one.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum NnmsStatus nnms_code_from_file(const char *path, struct NnmsCode **out);

/**
 * Parses alist text. `k` overrides the information length; pass 0 to use
 * `N - rank(H)`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` valid for writes.
 */
enum NnmsStatus nnms_code_from_alist(const char *text, size_t k, struct NnmsCode **out);

/**
 * Builds a bundled code by name, e.g. `eg1023` or `reg96`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` valid for writes.
 */
enum NnmsStatus nnms_code_builtin(const char *name, struct NnmsCode **out);

/**
 * # Safety
 * `code` must be null or a handle from an `nnms_code_*` constructor that
 * has not been freed.
 */
void nnms_code_free(struct NnmsCode *code);

/**
 * Code length N; 0 for a null handle.
 *
 * # Safety
 * `code` must be null or a live handle.
 */
size_t nnms_code_n(const struct NnmsCode *code);

/**
 * Number of parity checks M; 0 for a null handle.
 *
 * # Safety
 * `code` must be null or a live handle.
 */
size_t nnms_code_m(const struct NnmsCode *code);

/**
 * Information length K; 0 for a null handle.
 *
 * # Safety
 * `code` must be null or a live handle.
 */
size_t nnms_code_k(const struct NnmsCode *code);

/**
 * Number of Tanner-graph edges; 0 for a null handle.
 *
 * # Safety
 * `code` must be null or a live handle.
 */
size_t nnms_code_edges(const struct NnmsCode *code);

/**
 * Channel noise variance at `ebn0_db` for this code's rate.
 *
 * # Safety
 * `code` must be a live handle and `out` valid for writes.
 */
enum NnmsStatus nnms_snr_to_sigma2(const struct NnmsCode *code, double ebn0_db, double *out);

/**
 * Decoder with fixed weights: `bp`, `ms`, `nms:F`, `oms:B`, or a weighted
 * scheme (`unnms`, `snnms`, `annms`) at its all-ones initialization.
 *
 * # Safety
 * `code` must be a live handle, `scheme` a NUL-terminated string and
 * `out` valid for writes.
 */
enum NnmsStatus nnms_decoder_new(const struct NnmsCode *code,
                                 const char *scheme,
                                 size_t t_max,
                                 struct NnmsDecoder **out);

/**
 * Decoder from a trained weight file.
 *
 * # Safety
 * `code` must be a live handle, `path` a NUL-terminated string and `out`
 * valid for writes.
 */
enum NnmsStatus nnms_decoder_from_weights(const struct NnmsCode *code,
                                          const char *path,
                                          struct NnmsDecoder **out);

/**
 * Turns syndrome-based early exit on (the default) or off.
 *
 * # Safety
 * `decoder` must be a live handle.
 */
enum NnmsStatus nnms_decoder_set_early_exit(struct NnmsDecoder *decoder, bool enabled);

/**
 * Maximum iterations of the decoder.
 *
 * # Safety
 * `decoder` must be null or a live handle.
 */
size_t nnms_decoder_t_max(const struct NnmsDecoder *decoder);

/**
 * Decodes one frame of `n` channel LLRs (positive favours bit 0).
 *
 * `hard_out` receives `n` bits. `soft_out`, `iterations_out` and
 * `converged_out` may be null.
 *
 * # Safety
 * `llrs` must point to `n` doubles, `hard_out` to `n` writable bytes and
 * `soft_out`, if not null, to `n` writable doubles.
 */
enum NnmsStatus nnms_decoder_decode(struct NnmsDecoder *decoder,
                                    const double *llrs,
                                    size_t n,
                                    uint8_t *hard_out,
                                    double *soft_out,
                                    size_t *iterations_out,
                                    bool *converged_out);

/**
 * # Safety
 * `decoder` must be null or a handle from an `nnms_decoder_*` constructor
 * that has not been freed.
 */
void nnms_decoder_free(struct NnmsDecoder *decoder);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NNMS_H */
