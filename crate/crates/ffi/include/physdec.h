#ifndef PHYSDEC_H
#define PHYSDEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PhysdecStatus {
  PHYSDEC_STATUS_OK = 0,
  PHYSDEC_STATUS_NULL_POINTER = 1,
  PHYSDEC_STATUS_INVALID_ARGUMENT = 2,
  PHYSDEC_STATUS_CODE = 3,
  PHYSDEC_STATUS_CONFIG = 4,
  PHYSDEC_STATUS_SOLVER = 5,
  PHYSDEC_STATUS_DIVERGED = 6,
  PHYSDEC_STATUS_BUFFER_SIZE = 7,
  PHYSDEC_STATUS_PANIC = 8,
} PhysdecStatus;

typedef enum PhysdecDecoder {
  PHYSDEC_DECODER_GF = 0,
  PHYSDEC_DECODER_PEAK = 1,
  PHYSDEC_DECODER_BP = 2,
  PHYSDEC_DECODER_ML = 3,
} PhysdecDecoder;

/**
 * A parity-check matrix.
 */
typedef struct PhysdecCode PhysdecCode;

/**
 * A validated experiment: code, solver grid, pulse layout and decoder
 * parameters.
 */
typedef struct PhysdecSystem PhysdecSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *physdec_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *physdec_version(void);

/**
 * Loads a builtin code: `hamming7_4`, `bch15_7` or `bch31_15`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PhysdecStatus physdec_code_builtin(const char *name, struct PhysdecCode **out);

/**
 * Parses a parity-check matrix given as rows of `0`/`1` characters.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PhysdecStatus physdec_code_parse(const char *text, struct PhysdecCode **out);

/**
 * # Safety
 * `code` must be null or a handle from `physdec_code_*`, freed at most once.
 */
void physdec_code_free(struct PhysdecCode *code);

/**
 * Writes the block length and the number of parity checks.
 *
 * # Safety
 * `code` must be a live handle; `n` and `m` valid pointers.
 */
enum PhysdecStatus physdec_code_dims(const struct PhysdecCode *code, size_t *n, size_t *m);

/**
 * Sets `*out` to 1 when the bipolar `word` satisfies every parity check.
 *
 * # Safety
 * `word` must point to `len` doubles and `out` be valid.
 */
enum PhysdecStatus physdec_code_is_codeword(const struct PhysdecCode *code,
                                            const double *word,
                                            size_t len,
                                            int32_t *out);

/**
 * Code potential energy `h(x)` with weights `alpha`, `beta`.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` be valid.
 */
enum PhysdecStatus physdec_potential_energy(const struct PhysdecCode *code,
                                            const double *x,
                                            size_t len,
                                            double alpha,
                                            double beta,
                                            double *out);

/**
 * Builds a system from an experiment config in JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PhysdecStatus physdec_system_from_json(const char *json, struct PhysdecSystem **out);

/**
 * Builds a system from a bundled preset (`heat_demo`, `heat_ber`,
 * `hamming_ml`, `nlse_ber`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PhysdecStatus physdec_system_preset(const char *name, struct PhysdecSystem **out);

/**
 * # Safety
 * `system` must be null or a handle from `physdec_system_*`, freed at most once.
 */
void physdec_system_free(struct PhysdecSystem *system);

/**
 * Writes the number of pulses (code length), the number of sensors, and
 * whether samples are complex (1 for the NLSE, 0 for heat).
 *
 * # Safety
 * `system` must be a live handle; the outputs valid pointers.
 */
enum PhysdecStatus physdec_system_dims(const struct PhysdecSystem *system,
                                       size_t *n_pulses,
                                       size_t *n_sensors,
                                       int32_t *is_complex);

/**
 * Sends the bipolar `word` through the channel with noise `sigma` drawn
 * from `seed`, writing `m` sensor values to `y_re` and, when non-null,
 * `y_im`.
 *
 * # Safety
 * `word` must point to `n` doubles; `y_re` (and `y_im` if non-null) to `m`.
 */
enum PhysdecStatus physdec_system_transmit(const struct PhysdecSystem *system,
                                           const double *word,
                                           size_t n,
                                           double sigma,
                                           uint64_t seed,
                                           double *y_re,
                                           double *y_im,
                                           size_t m);

/**
 * Decodes `m` sensor values into the `n`-entry bipolar `estimate`. `y_im`
 * may be null (treated as zero); heat systems reject a nonzero imaginary
 * part. `seed` drives the random start of the gradient-flow decoder. A
 * diverged run returns `Diverged` with the last finite estimate written.
 *
 * # Safety
 * `y_re` (and `y_im` if non-null) must point to `m` doubles, `estimate` to `n`.
 */
enum PhysdecStatus physdec_system_decode(const struct PhysdecSystem *system,
                                         enum PhysdecDecoder decoder,
                                         const double *y_re,
                                         const double *y_im,
                                         size_t m,
                                         uint64_t seed,
                                         double *estimate,
                                         size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHYSDEC_H */
