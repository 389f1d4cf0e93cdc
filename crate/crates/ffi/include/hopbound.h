#ifndef HOPBOUND_H
#define HOPBOUND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HbStatus {
  HB_STATUS_OK = 0,
  HB_STATUS_NULL_POINTER = 1,
  HB_STATUS_DOMAIN = 2,
  HB_STATUS_INFEASIBLE = 3,
  HB_STATUS_INFINITE_LATENCY = 4,
  HB_STATUS_INSTANCE_TOO_LARGE = 5,
  HB_STATUS_BUFFER_TOO_SMALL = 6,
  HB_STATUS_INVALID_SCENARIO = 7,
  HB_STATUS_PANIC = 8,
} HbStatus;

typedef enum HbRegime {
  HB_REGIME_PARAMETRIC_INTERIOR = 0,
  HB_REGIME_RHO_CLAMPED_AT_ONE = 1,
  HB_REGIME_ZERO_ABOVE_CAPACITY = 2,
  HB_REGIME_RHO_CAPPED = 3,
} HbRegime;

/*
 Opaque hop channel.
 */
typedef struct HbChannel HbChannel;

/*
 Opaque validated scenario.
 */
typedef struct HbScenario HbScenario;

typedef struct HbExponent {
  double exponent;
  double rho_star;
  enum HbRegime regime;
} HbExponent;

typedef struct HbLatencyEstimate {
  double analytic;
  double mc_mean;
  double mc_stderr;
  uint64_t trials;
  uint64_t seed;
} HbLatencyEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *hb_version(void);

/*
 Copies the calling thread's last error message into `buf` (truncated and
 always NUL-terminated when `len > 0`). Returns the full message length in
 bytes, excluding the terminator.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t hb_last_error_message(char *buf, size_t len);

/*
 AWGN hop with Gaussian input at a linear SNR.

 # Safety
 `out` must be valid for writes.
 */
enum HbStatus hb_channel_awgn(double snr, struct HbChannel **out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum HbStatus hb_channel_awgn_db(double snr_db, struct HbChannel **out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum HbStatus hb_channel_bsc(double crossover, struct HbChannel **out);

/*
 Discrete memoryless hop. `transition` is row-major with `num_inputs` rows
 of `num_outputs` entries; `input_dist` may be null for the uniform input.

 # Safety
 `transition` must hold `num_inputs * num_outputs` doubles, `input_dist`
 must be null or hold `num_inputs` doubles, and `out` must be valid for
 writes.
 */
enum HbStatus hb_channel_dmc(const double *transition,
                             size_t num_inputs,
                             size_t num_outputs,
                             const double *input_dist,
                             struct HbChannel **out);

/*
 Releases a channel; null is ignored.

 # Safety
 `ch` must be null or come from an `hb_channel_*` constructor and not have
 been freed.
 */
void hb_channel_free(struct HbChannel *ch);

/*
 Capacity in nats per channel use.

 # Safety
 `ch` must be a live handle and `out` valid for writes.
 */
enum HbStatus hb_channel_capacity(const struct HbChannel *ch, double *out);

/*
 Gallager function `E0(rho)`.

 # Safety
 `ch` must be a live handle and `out` valid for writes.
 */
enum HbStatus hb_channel_e0(const struct HbChannel *ch, double rho, double *out);

/*
 # Safety
 `ch` must be a live handle and `out` valid for writes.
 */
enum HbStatus hb_critical_rate(const struct HbChannel *ch, double *out);

/*
 # Safety
 `ch` must be a live handle and `out` valid for writes.
 */
enum HbStatus hb_random_coding_exponent(const struct HbChannel *ch,
                                        double rate,
                                        struct HbExponent *out);

/*
 # Safety
 `ch` must be a live handle and `out` valid for writes.
 */
enum HbStatus hb_sphere_packing_exponent(const struct HbChannel *ch,
                                         double rate,
                                         struct HbExponent *out);

/*
 Capacity-optimal time fractions; writes `n` values to `lambdas` and the
 network capacity to `network_rate` (which may be null).

 # Safety
 `capacities` and `lambdas` must hold `n` doubles; `network_rate` must be
 null or valid for writes.
 */
enum HbStatus hb_optimal_time_share(const double *capacities,
                                    size_t n,
                                    double *lambdas,
                                    double *network_rate);

/*
 Integer blocklengths minimizing `sum_n exp(-Q_n E_n)` for `Q = total`.

 # Safety
 `exponents` and `blocks` must hold `n` elements.
 */
enum HbStatus hb_reliability_optimal_blocks(const double *exponents,
                                            size_t n,
                                            uint64_t total,
                                            uint64_t *blocks);

/*
 Information-continuous blocklengths; `ln_m` (nullable) receives `ln M`.

 # Safety
 `rates` and `blocks` must hold `n` elements; `ln_m` must be null or valid
 for writes.
 */
enum HbStatus hb_information_continuous_blocks(const double *rates,
                                               size_t n,
                                               uint64_t total,
                                               uint64_t *blocks,
                                               double *ln_m);

/*
 Expected end-to-end latency in channel uses.

 # Safety
 `failure_probs` and `costs` must hold `n` elements; `out` must be valid
 for writes.
 */
enum HbStatus hb_expected_latency(const double *failure_probs,
                                  const uint64_t *costs,
                                  size_t n,
                                  double *out);

/*
 Monte Carlo latency estimate; identical for any `workers >= 1`.

 # Safety
 `failure_probs` and `costs` must hold `n` elements; `out` must be valid
 for writes.
 */
enum HbStatus hb_simulate_latency(const double *failure_probs,
                                  const uint64_t *costs,
                                  size_t n,
                                  uint64_t trials,
                                  uint64_t seed,
                                  size_t workers,
                                  struct HbLatencyEstimate *out);

/*
 Parses and validates a scenario document (UTF-8 JSON).

 # Safety
 `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum HbStatus hb_scenario_from_json(const char *json, struct HbScenario **out);

/*
 Releases a scenario; null is ignored.

 # Safety
 `sc` must be null or come from `hb_scenario_from_json` and not have been
 freed.
 */
void hb_scenario_free(struct HbScenario *sc);

/*
 # Safety
 `sc` must be a live handle and `out` valid for writes.
 */
enum HbStatus hb_scenario_num_hops(const struct HbScenario *sc, size_t *out);

/*
 Runs the scenario's allocation method. `blocks` must have room for
 `capacity` entries; with fewer than the hop count the call fails with
 `BufferTooSmall` and writes nothing. `end_to_end_rate` may be null.

 # Safety
 `sc` must be a live handle, `blocks` valid for `capacity` writes and
 `end_to_end_rate` null or valid for writes.
 */
enum HbStatus hb_scenario_allocate(const struct HbScenario *sc,
                                   uint64_t *blocks,
                                   size_t capacity,
                                   double *end_to_end_rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOPBOUND_H */
