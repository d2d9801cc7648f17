#ifndef CHAOSRAND_H
#define CHAOSRAND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrGeneratorKind {
  CR_GENERATOR_KIND_LFSR = 0,
  CR_GENERATOR_KIND_MULTI_LFSR = 1,
  CR_GENERATOR_KIND_LOGISTIC = 2,
  CR_GENERATOR_KIND_PENDULUM = 3,
} CrGeneratorKind;

typedef enum CrMixMode {
  CR_MIX_MODE_XOR_STATE = 0,
  CR_MIX_MODE_PERTURB_VALUE = 1,
} CrMixMode;

typedef enum CrStatTest {
  CR_STAT_TEST_MONOBIT = 0,
  CR_STAT_TEST_RUNS = 1,
  CR_STAT_TEST_CHI_SQUARE_BYTES = 2,
  CR_STAT_TEST_LAG_AUTOCORRELATION = 3,
} CrStatTest;

typedef enum CrStatus {
  CR_STATUS_OK = 0,
  CR_STATUS_INVALID_ARGUMENT = 1,
  CR_STATUS_NULL_POINTER = 2,
  CR_STATUS_CORRUPTED_STATE = 3,
  CR_STATUS_NOT_READY = 4,
  CR_STATUS_DEGENERATE = 5,
  CR_STATUS_SOURCE_UNHEALTHY = 6,
  CR_STATUS_EXHAUSTED = 7,
  CR_STATUS_IO = 8,
  CR_STATUS_PANIC = 9,
} CrStatus;

typedef enum CrVerdict {
  CR_VERDICT_PASS = 0,
  CR_VERDICT_FAIL = 1,
  CR_VERDICT_NOT_APPLICABLE = 2,
} CrVerdict;

/**
 * Opaque generator handle.
 */
typedef struct CrGenerator CrGenerator;

typedef struct CrTestReport {
  uint64_t n;
  double statistic;
  double p_value;
  double alpha;
  enum CrVerdict verdict;
} CrTestReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a generator with default parameters, burn-in already run.
 *
 * # Safety
 * `out` must point to writable storage for one handle.
 */
enum CrStatus cr_generator_new_default(enum CrGeneratorKind kind, struct CrGenerator **out);

/**
 * Creates a generator from a NUL-terminated JSON run configuration.
 *
 * # Safety
 * `json` must be a valid C string; `out` must point to writable storage.
 */
enum CrStatus cr_generator_from_config_json(const char *json, struct CrGenerator **out);

/**
 * Fills `buf[0..len]` with stream bytes, outputs packed MSB first.
 *
 * # Safety
 * `g` must be a live handle and `buf` valid for `len` writable bytes.
 */
enum CrStatus cr_generator_fill_bytes(struct CrGenerator *g, uint8_t *buf, size_t len);

/**
 * Writes the next output word to `out`; its width is
 * [`cr_generator_output_bits`].
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum CrStatus cr_generator_next_word(struct CrGenerator *g, uint64_t *out);

/**
 * Width in bits of each word from [`cr_generator_next_word`]; 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
uint32_t cr_generator_output_bits(const struct CrGenerator *g);

/**
 * Mixes one entropy word into the generator state.
 *
 * # Safety
 * `g` must be a live handle.
 */
enum CrStatus cr_generator_reseed(struct CrGenerator *g, uint32_t word, enum CrMixMode mode);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `g` must be null or a handle not already freed.
 */
void cr_generator_free(struct CrGenerator *g);

/**
 * Runs one statistical test on `len` bytes, read MSB first.
 *
 * # Safety
 * `bytes` must be valid for `len` bytes and `out` writable.
 */
enum CrStatus cr_run_test(enum CrStatTest test,
                          const uint8_t *bytes,
                          size_t len,
                          double alpha,
                          struct CrTestReport *out);

/**
 * Modeled hardware cost of `n_samples` outputs under the default cycle model.
 *
 * # Safety
 * `cycles` and `seconds` must be writable.
 */
enum CrStatus cr_estimate_cycles(enum CrGeneratorKind kind,
                                 uint64_t n_samples,
                                 uint64_t *cycles,
                                 double *seconds);

/**
 * Message for the last failed call on this thread, valid until the next
 * failing call on the same thread. Empty if nothing has failed.
 */
const char *cr_last_error(void);

/**
 * Library version as a static C string.
 */
const char *cr_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHAOSRAND_H */
