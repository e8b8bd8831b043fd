#ifndef RECOIL_FIDELITY_H
#define RECOIL_FIDELITY_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RfStatus {
  RF_STATUS_OK = 0,
  RF_STATUS_NULL_POINTER = 1,
  RF_STATUS_INVALID_ARGUMENT = 2,
  RF_STATUS_CONFIG = 3,
  RF_STATUS_NON_CONVERGENCE = 4,
  RF_STATUS_BUFFER_TOO_SMALL = 5,
  RF_STATUS_INTERNAL = 6,
} RfStatus;

typedef enum RfChannel {
  RF_CHANNEL_OPPOSITE1001 = 0,
  RF_CHANNEL_OPPOSITE0110 = 1,
  RF_CHANNEL_SAME1100 = 2,
  RF_CHANNEL_SAME0011 = 3,
} RfChannel;

typedef enum RfKappa {
  RF_KAPPA_TABLE = 0,
  RF_KAPPA_PRINTED_EQ37 = 1,
  RF_KAPPA_ORACLE = 2,
} RfKappa;

/**
 * Opaque protocol handle.
 */
typedef struct RfProtocol RfProtocol;

typedef struct RfBellResult {
  double population_down_up;
  double population_up_down;
  double coherence_re;
  double coherence_im;
  double fidelity;
  double herald_probability;
} RfBellResult;

typedef struct RfMcResult {
  double fidelity;
  double fidelity_error;
  double coherence_re;
  double coherence_im;
  double coherence_error;
  double herald_probability;
  double herald_probability_error;
  double discard_probability;
} RfMcResult;

typedef struct RfTableRow {
  double wavelength_nm;
  double lifetime_ns;
  double recoil_frequency_khz;
  /**
   * 2E_T as a probability.
   */
  double timebin_error;
  /**
   * 2E_R as a probability.
   */
  double random_error;
  double timebin_length_ell;
} RfTableRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *rf_last_error_message(void);

void rf_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rf_version(void);

/**
 * Builds a protocol from a JSON configuration.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum RfStatus rf_protocol_from_json(const char *json, struct RfProtocol **out);

/**
 * Releases a protocol; NULL is ignored.
 *
 * # Safety
 * `protocol` must come from [`rf_protocol_from_json`] and not be used afterwards.
 */
void rf_protocol_free(struct RfProtocol *protocol);

/**
 * Quadrature fidelity of one herald channel.
 *
 * # Safety
 * `protocol` must be a live handle and `out` writable.
 */
enum RfStatus rf_fidelity(const struct RfProtocol *protocol,
                          enum RfChannel channel,
                          struct RfBellResult *out);

/**
 * Monte-Carlo estimate of one herald channel.
 *
 * # Safety
 * `protocol` must be a live handle and `out` writable.
 */
enum RfStatus rf_mc_protocol(const struct RfProtocol *protocol,
                             enum RfChannel channel,
                             uint64_t samples,
                             uint64_t seed,
                             struct RfMcResult *out);

/**
 * W(w) for a difference window of `w` lifetimes.
 */
double rf_window_variance_factor(double w);

/**
 * Two-photon detection yield; pass INFINITY for unbounded windows.
 *
 * # Safety
 * `out` must be writable.
 */
enum RfStatus rf_detection_yield(double detector_window_ns,
                                 double difference_window_ns,
                                 double lifetime_ns,
                                 double *out);

/**
 * ℓ solving e^{−ℓ} = ½ℓ²x for x = ω^{ΔR}τ.
 *
 * # Safety
 * `out` must be writable.
 */
enum RfStatus rf_solve_timebin_length(double recoil_times_lifetime, double *out);

/**
 * Number of rows [`rf_table1`] writes.
 */
size_t rf_table1_len(void);

/**
 * Fills `rows` with the per-species recoil table. `written` receives the
 * row count, also when the buffer is too small.
 *
 * # Safety
 * `rows` must point to `capacity` writable rows; `written` must be writable.
 */
enum RfStatus rf_table1(double w,
                        enum RfKappa kappa,
                        struct RfTableRow *rows,
                        size_t capacity,
                        size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECOIL_FIDELITY_H */
