#ifndef MDIQKD_H
#define MDIQKD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum MdiqkdStatus {
  MDIQKD_STATUS_OK = 0,
  MDIQKD_STATUS_NULL_POINTER = 1,
  MDIQKD_STATUS_INVALID_ARGUMENT = 2,
  MDIQKD_STATUS_CUTOFF_MISMATCH = 3,
  MDIQKD_STATUS_CUTOFF_TOO_LARGE = 4,
  MDIQKD_STATUS_DECOY_FAILURE = 5,
  MDIQKD_STATUS_UNDEFINED_ERROR_RATE = 6,
  MDIQKD_STATUS_CONFIG_ERROR = 7,
  MDIQKD_STATUS_INFEASIBLE = 8,
  MDIQKD_STATUS_IO_ERROR = 9,
  MDIQKD_STATUS_INVALID_UTF8 = 10,
  MDIQKD_STATUS_BUFFER_TOO_SMALL = 11,
  MDIQKD_STATUS_OUT_OF_RANGE = 12,
  MDIQKD_STATUS_PANIC = 13,
} MdiqkdStatus;

typedef enum MdiqkdSourceKind {
  MDIQKD_SOURCE_KIND_CSS = 0,
  MDIQKD_SOURCE_KIND_NONIDEAL_CSS = 1,
  MDIQKD_SOURCE_KIND_WCS = 2,
  MDIQKD_SOURCE_KIND_SPS = 3,
  MDIQKD_SOURCE_KIND_VACUUM = 4,
} MdiqkdSourceKind;

typedef enum MdiqkdBasis {
  MDIQKD_BASIS_Z = 0,
  MDIQKD_BASIS_X = 1,
} MdiqkdBasis;

typedef enum MdiqkdRole {
  MDIQKD_ROLE_CORRECT = 0,
  MDIQKD_ROLE_ERROR = 1,
} MdiqkdRole;

typedef enum MdiqkdMethod {
  MDIQKD_METHOD_ASYMPTOTIC = 0,
  MDIQKD_METHOD_STANDARD = 1,
  MDIQKD_METHOD_CHERNOFF = 2,
} MdiqkdMethod;

// Precomputed beam-splitter outputs up to a photon cutoff.
typedef struct MdiqkdOptics MdiqkdOptics;

// Rows produced by a sweep or comparison.
typedef struct MdiqkdRateTable MdiqkdRateTable;

// A parsed run configuration.
typedef struct MdiqkdScenario MdiqkdScenario;

// Yields of every photon-number pair at one channel efficiency.
typedef struct MdiqkdYieldTable MdiqkdYieldTable;

// One row of a rate table.
typedef struct MdiqkdRatePoint {
  double distance_km;
  enum MdiqkdMethod method;
  double mu1;
  double mu2;
  double q_z;
  double e_z;
  double y11_lower;
  double e11_upper;
  double rate;
} MdiqkdRatePoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mdiqkd_version(void);

// Message for the most recent failure on this thread, or NULL. The
// pointer stays valid until the next failing call on the same thread.
const char *mdiqkd_last_error(void);

// Fills `probabilities` with `P(0..=N_max)` of a source.
//
// `odd_weight` is read only for the contaminated CSS. When `capacity` is
// too small, `*len` receives the required length and
// `MDIQKD_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
//
// `probabilities` must point to `capacity` writable doubles (or be NULL
// when `capacity` is 0); `len` and `tail_mass` must be valid or NULL.
enum MdiqkdStatus mdiqkd_photon_distribution(enum MdiqkdSourceKind kind,
                                             double intensity,
                                             double odd_weight,
                                             double tail_tolerance,
                                             double *probabilities,
                                             size_t capacity,
                                             size_t *len,
                                             double *tail_mass);

// Secret key rate `max(0, Q11 (1 - H(e11)) - Q f H(E))`.
double mdiqkd_key_rate(double q11_z, double e11_x, double q_z, double e_z, double f);

// # Safety
//
// `out` must be a valid pointer to receive the handle.
enum MdiqkdStatus mdiqkd_optics_new(size_t cutoff, struct MdiqkdOptics **out);

// # Safety
//
// `optics` must be NULL or a handle from `mdiqkd_optics_new` not yet freed.
void mdiqkd_optics_free(struct MdiqkdOptics *optics);

// Yield table for per-arm channel efficiency `efficiency` and detector
// dark-count probability `dark_count`.
//
// # Safety
//
// `optics` must be a live handle and `out` a valid pointer.
enum MdiqkdStatus mdiqkd_yield_table_new(const struct MdiqkdOptics *optics,
                                         double efficiency,
                                         double dark_count,
                                         struct MdiqkdYieldTable **out);

// # Safety
//
// `table` must be NULL or a live yield-table handle.
void mdiqkd_yield_table_free(struct MdiqkdYieldTable *table);

// # Safety
//
// `table` must be a live handle and `cutoff` a valid pointer.
enum MdiqkdStatus mdiqkd_yield_table_cutoff(const struct MdiqkdYieldTable *table, size_t *cutoff);

// Yield of Alice sending `i` and Bob `j` photons.
//
// # Safety
//
// `table` must be a live handle and `value` a valid pointer.
enum MdiqkdStatus mdiqkd_yield_table_get(const struct MdiqkdYieldTable *table,
                                         enum MdiqkdBasis basis,
                                         enum MdiqkdRole role,
                                         size_t i,
                                         size_t j,
                                         double *value);

// Parses a configuration in the `key = value` format of the CLI.
//
// # Safety
//
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum MdiqkdStatus mdiqkd_scenario_from_config(const char *text, struct MdiqkdScenario **out);

// # Safety
//
// `scenario` must be NULL or a live scenario handle.
void mdiqkd_scenario_free(struct MdiqkdScenario *scenario);

// Overrides the finite-key method and the pulse pairs per channel.
//
// # Safety
//
// `scenario` must be a live handle.
enum MdiqkdStatus mdiqkd_scenario_set_finite_key(struct MdiqkdScenario *scenario,
                                                 enum MdiqkdMethod method,
                                                 double pulse_pairs);

// Sweeps the configured source over the distance grid.
//
// # Safety
//
// `scenario` must be a live handle and `out` a valid pointer.
enum MdiqkdStatus mdiqkd_run_sweep(const struct MdiqkdScenario *scenario,
                                   struct MdiqkdRateTable **out);

// Sweeps every comparison source over the distance grid.
//
// # Safety
//
// `scenario` must be a live handle and `out` a valid pointer.
enum MdiqkdStatus mdiqkd_compare_sources(const struct MdiqkdScenario *scenario,
                                         struct MdiqkdRateTable **out);

// # Safety
//
// `table` must be NULL or a live rate-table handle.
void mdiqkd_rate_table_free(struct MdiqkdRateTable *table);

// Number of rows, or 0 for a NULL handle.
//
// # Safety
//
// `table` must be NULL or a live handle.
size_t mdiqkd_rate_table_len(const struct MdiqkdRateTable *table);

// # Safety
//
// `table` must be a live handle and `row` a valid pointer.
enum MdiqkdStatus mdiqkd_rate_table_row(const struct MdiqkdRateTable *table,
                                        size_t index,
                                        struct MdiqkdRatePoint *row);

// Source label of a row, or NULL when out of range. Owned by the table.
//
// # Safety
//
// `table` must be NULL or a live handle.
const char *mdiqkd_rate_table_source(const struct MdiqkdRateTable *table, size_t index);

// Writes the table as CSV in the CLI's format.
//
// # Safety
//
// `table` must be a live handle and `path` a NUL-terminated string.
enum MdiqkdStatus mdiqkd_rate_table_write_csv(const struct MdiqkdRateTable *table,
                                              const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDIQKD_H */
