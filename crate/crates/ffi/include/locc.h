#ifndef LOCC_H
#define LOCC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero values match the CLI exit codes where they overlap.
 */
typedef enum LoccStatus {
  LOCC_STATUS_OK = 0,
  LOCC_STATUS_INVALID_INPUT = 2,
  LOCC_STATUS_UNSUPPORTED = 3,
  LOCC_STATUS_SEARCH_FAILED = 4,
  LOCC_STATUS_NULL_POINTER = 5,
  LOCC_STATUS_PANIC = 6,
} LoccStatus;

/**
 * Opaque validated state family.
 */
typedef struct LoccFamily LoccFamily;

/**
 * Opaque compiled protocol.
 */
typedef struct LoccProtocol LoccProtocol;

/**
 * Pipeline settings; start from [`locc_options_default`].
 */
typedef struct LoccOptions {
  double zero_tol;
  double ortho_tol;
  double rank_tol;
  double support_tol;
  uint64_t seed;
  bool reorthonormalize;
  bool best_effort;
} LoccOptions;

/**
 * Exact outcome probabilities for one true state.
 */
typedef struct LoccOutcome {
  double success;
  double inconclusive;
  double misidentification;
} LoccOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next failing call.
 */
const char *locc_last_error_message(void);

struct LoccOptions locc_options_default(void);

/**
 * Parses and validates a state file given as JSON text.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum LoccStatus locc_family_from_json(const char *json,
                                      double ortho_tol,
                                      bool reorthonormalize,
                                      struct LoccFamily **out);

/**
 * # Safety
 * `family` must come from [`locc_family_from_json`] and not be freed yet, or be null.
 */
void locc_family_free(struct LoccFamily *family);

/**
 * Number of states, or 0 for a null handle.
 *
 * # Safety
 * `family` must be a live handle or null.
 */
size_t locc_family_len(const struct LoccFamily *family);

/**
 * Writes the analysis report as JSON.
 *
 * # Safety
 * `family` must be a live handle, `options` readable or null (defaults), `out_json` writable.
 * Free the string with [`locc_string_free`].
 */
enum LoccStatus locc_analyze(const struct LoccFamily *family,
                             const struct LoccOptions *options,
                             char **out_json);

/**
 * Builds the distinguishing basis and compiles the protocol.
 *
 * # Safety
 * `family` must be a live handle, `options` readable or null, `out` writable.
 */
enum LoccStatus locc_compile(const struct LoccFamily *family,
                             const struct LoccOptions *options,
                             struct LoccProtocol **out);

/**
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum LoccStatus locc_protocol_from_json(const char *json, struct LoccProtocol **out);

/**
 * # Safety
 * `protocol` must be a live handle; `out_json` writable. Free with [`locc_string_free`].
 */
enum LoccStatus locc_protocol_to_json(const struct LoccProtocol *protocol, char **out_json);

/**
 * # Safety
 * `protocol` must be a live handle or null.
 */
void locc_protocol_free(struct LoccProtocol *protocol);

/**
 * Exact success, inconclusive and misidentification probabilities when the
 * state at `true_index` (0-based) is prepared.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum LoccStatus locc_outcome_probabilities(const struct LoccProtocol *protocol,
                                           const struct LoccFamily *family,
                                           size_t true_index,
                                           struct LoccOutcome *out);

/**
 * Runs `trials` sampled rounds and writes the statistics as JSON.
 *
 * # Safety
 * Handles must be live; `out_json` writable. Free with [`locc_string_free`].
 */
enum LoccStatus locc_simulate(const struct LoccProtocol *protocol,
                              const struct LoccFamily *family,
                              size_t true_index,
                              uint64_t trials,
                              uint64_t seed,
                              char **out_json);

/**
 * Schmidt lower bound on the success probability with `n_p` error slots.
 *
 * # Safety
 * `family` must be a live handle; `out_bound` writable.
 */
enum LoccStatus locc_bound(const struct LoccFamily *family, size_t n_p, double *out_bound);

/**
 * # Safety
 * `s` must be a string returned by this library and not yet freed, or null.
 */
void locc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCC_H */
