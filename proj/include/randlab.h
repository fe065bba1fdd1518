/* randlab: design-based randomization inference, exact where it matters.
 *
 * C interface to the shared library. All functions return rl_status; on
 * RL_OK any output pointer has been filled, otherwise rl_last_error() gives
 * a message for the calling thread. Strings returned through char** are
 * heap-allocated; release them with rl_string_free. Handles are opaque and
 * freed by their rl_*_free function; freeing NULL is a no-op.
 */
#ifndef RANDLAB_H
#define RANDLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
  RL_OK = 0,
  RL_ERR_INVALID_ARGUMENT = 1,
  RL_ERR_PARSE = 2,
  RL_ERR_CAP_EXCEEDED = 3, /* assignment support larger than the cap */
  RL_ERR_INCOMPATIBLE = 4, /* design does not fit the population or data */
  RL_ERR_INTERNAL = 5
} rl_status;

typedef struct rl_population rl_population;
typedef struct rl_model rl_model;
typedef struct rl_design rl_design;
typedef struct rl_observed rl_observed;
typedef struct rl_report rl_report;

const char* rl_version(void);

/* Message from the calling thread's most recent failing call; empty string
 * when nothing failed yet. The pointer stays owned by the library. */
const char* rl_last_error(void);

void rl_string_free(char* s);

/* ---- populations -------------------------------------------------- */
/* CSV header: unit_id,y1,y0 with optional stratum and cluster columns.
 * Values are decimal numerals or p/q fractions, kept exact. */
rl_status rl_population_from_csv(const char* text, rl_population** out);
rl_status rl_population_from_csv_file(const char* path, rl_population** out);
rl_status rl_population_to_csv(const rl_population* pop, char** out);
rl_status rl_population_size(const rl_population* pop, int32_t* out);
rl_status rl_population_summarize(const rl_population* pop, rl_report** out);
void rl_population_free(rl_population* pop);

/* ---- super-population models -------------------------------------- */
rl_status rl_model_gaussian(double mean1, double mean0, double v1, double v0,
                            double rho, rl_model** out);
rl_status rl_model_constant_effect(double mean0, double v0, double tau,
                                   rl_model** out);
/* Parameters as exact numerals (decimal or p/q). */
rl_status rl_model_two_point(const char* y1_a, const char* y0_a,
                             const char* y1_b, const char* y0_b,
                             const char* prob_a, rl_model** out);
rl_status rl_model_draw(const rl_model* model, int32_t n, uint64_t seed,
                        rl_population** out);
void rl_model_free(rl_model* model);

/* ---- designs ------------------------------------------------------ */
rl_status rl_design_complete(int32_t n1, rl_design** out);
rl_status rl_design_stratified(const char* const* labels, const int32_t* n1s,
                               size_t count, rl_design** out);
rl_status rl_design_matched_pairs(rl_design** out);
rl_status rl_design_cluster(int32_t m1, rl_design** out);
void rl_design_free(rl_design* d);

/* ---- observation and estimation ----------------------------------- */
/* CSV header: unit_id,z,yobs with optional stratum and cluster columns. */
rl_status rl_observed_from_csv(const char* text, const rl_design* d,
                               rl_observed** out);
rl_status rl_observed_from_csv_file(const char* path, const rl_design* d,
                                    rl_observed** out);
/* Draws one assignment from the design and masks the population. */
rl_status rl_observe_sampled(const rl_population* pop, const rl_design* d,
                             uint64_t seed, rl_observed** out);
void rl_observed_free(rl_observed* o);

rl_status rl_estimate(const rl_observed* o, double alpha, rl_report** out);

/* ---- exact enumeration oracle -------------------------------------- */
typedef struct rl_enumerate_options {
  uint64_t cap;     /* refuse supports larger than this */
  int32_t threads;  /* worker count; any value gives identical reports */
  int32_t exact;    /* nonzero: exact rational reductions */
} rl_enumerate_options;

void rl_enumerate_options_default(rl_enumerate_options* out);

rl_status rl_enumerate_moments(const rl_population* pop, const rl_design* d,
                               const rl_enumerate_options* opts,
                               rl_report** out);

/* holds becomes 1 when the centered-residual expansion of tau_hat - tau_S
 * matches exactly for every assignment in the support. */
rl_status rl_verify_residual_identity(const rl_population* pop,
                                      const rl_design* d, uint64_t cap,
                                      int32_t* holds);

rl_status rl_frt_exact(const rl_observed* o, uint64_t cap, rl_report** out);
rl_status rl_frt_monte_carlo(const rl_observed* o, uint64_t draws,
                             uint64_t seed, rl_report** out);

/* Sharp lower bound on the effect-variance term from two marginal samples,
 * given as exact numerals or as single-column CSV files (header: value). */
rl_status rl_sharp_bound_values(const char* const* y1_values, size_t n1,
                                const char* const* y0_values, size_t n0,
                                rl_report** out);
rl_status rl_sharp_bound_files(const char* y1_path, const char* y0_path,
                               rl_report** out);

/* ---- Monte Carlo studies ------------------------------------------- */
typedef enum rl_study_mode {
  RL_STUDY_DECOMPOSITION = 0,
  RL_STUDY_UNBIASEDNESS = 1,
  RL_STUDY_COVERAGE = 2
} rl_study_mode;

typedef enum rl_study_target { RL_TARGET_TAU = 0, RL_TARGET_TAU_S = 1 } rl_study_target;

typedef struct rl_study_options {
  int32_t n;
  int32_t n1;
  uint64_t replications;
  double alpha;
  uint64_t master_seed;
  int32_t target; /* rl_study_target */
  double band;    /* tolerance multiplier on Monte Carlo SEs */
  int32_t assignments_per_population;
  uint64_t cap;
  int32_t threads;         /* never changes report bytes */
  int32_t per_replication; /* nonzero: keep the per-replication table */
} rl_study_options;

void rl_study_options_default(rl_study_options* out);

rl_status rl_run_study(const rl_model* model, int32_t mode,
                       const rl_study_options* opts, rl_report** out);

/* ---- reports ------------------------------------------------------- */
rl_status rl_report_json(const rl_report* r, char** out);
/* Flat one-record CSV (header line + value line). */
rl_status rl_report_csv(const rl_report* r, char** out);
/* Per-replication rows; fails when the report carries no table. */
rl_status rl_report_table_csv(const rl_report* r, char** out);
/* 1 or 0; fails when the report carries no pass/fail verdict. */
rl_status rl_report_pass(const rl_report* r, int32_t* out);
/* Numeric field lookup by dotted path, e.g. "metrics.coverage". */
rl_status rl_report_value(const rl_report* r, const char* key, double* out);
/* Adds a string field at the top level (provenance notes, file paths). */
rl_status rl_report_annotate(rl_report* r, const char* key, const char* value);
void rl_report_free(rl_report* r);

#ifdef __cplusplus
}
#endif

#endif /* RANDLAB_H */
