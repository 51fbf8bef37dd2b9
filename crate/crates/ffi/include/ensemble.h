#ifndef ENSEMBLE_H
#define ENSEMBLE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Largest number of configuration-space axes.
 */
#define ENS_MAX_DIMS 3

typedef enum EnsStatus {
  ENS_STATUS_OK = 0,
  ENS_STATUS_NULL_POINTER = 1,
  ENS_STATUS_INVALID_UTF8 = 2,
  ENS_STATUS_CONFIG = 3,
  ENS_STATUS_NUMERICAL = 4,
  ENS_STATUS_INVALID = 5,
  ENS_STATUS_IO = 6,
  ENS_STATUS_BUFFER_TOO_SMALL = 7,
  ENS_STATUS_OUT_OF_RANGE = 8,
  ENS_STATUS_PANIC = 9,
} EnsStatus;

typedef struct EnsAxioms EnsAxioms;

typedef struct EnsConfig EnsConfig;

typedef struct EnsScenario EnsScenario;

typedef struct EnsState EnsState;

typedef struct EnsObservables {
  double time;
  double norm;
  double energy;
  double max_q;
  uint32_t dims;
  double mean[ENS_MAX_DIMS];
  double variance[ENS_MAX_DIMS];
} EnsObservables;

/**
 * Worst hydro/reference agreement over the snapshots of a run.
 */
typedef struct EnsComparison {
  size_t snapshots;
  double max_l2_density;
  double min_fidelity;
} EnsComparison;

typedef struct EnsAxiomResult {
  double deviation;
  double tolerance;
  bool pass;
} EnsAxiomResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message; returns its length plus one.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t ens_last_error(char *buf, size_t cap);

size_t ens_scenario_count(void);

/**
 * Copy the name of preset `index`; returns its length plus one, or 0 when out of range.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t ens_scenario_name(size_t index, char *buf, size_t cap);

/**
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum EnsStatus ens_scenario_preset(const char *name, struct EnsScenario **out);

/**
 * Replace the coupling constants (`hbar`, `A`, `B`).
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum EnsStatus ens_scenario_set_constants(struct EnsScenario *scenario,
                                          double hbar,
                                          double a,
                                          double b);

/**
 * # Safety
 * `scenario` must be null or a handle from this library, freed at most once.
 */
void ens_scenario_free(struct EnsScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle; `out` must be valid for writes.
 */
enum EnsStatus ens_scenario_initial_state(const struct EnsScenario *scenario,
                                          struct EnsState **out);

/**
 * Evolve `state` by `duration` with the hydrodynamic solver at the stability-limit step.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum EnsStatus ens_evolve(const struct EnsScenario *scenario,
                          const struct EnsState *state,
                          double duration,
                          struct EnsState **out);

/**
 * Number of grid points in `state`, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t ens_state_len(const struct EnsState *state);

/**
 * # Safety
 * `state` must be null or a live handle.
 */
double ens_state_time(const struct EnsState *state);

/**
 * Copy the density in row-major order into `buf` (capacity `cap` values).
 *
 * # Safety
 * `state` must be a live handle; `buf` must be valid for `cap` values.
 */
enum EnsStatus ens_state_copy_p(const struct EnsState *state, double *buf, size_t cap);

/**
 * Copy the action in row-major order into `buf` (capacity `cap` values).
 *
 * # Safety
 * `state` must be a live handle; `buf` must be valid for `cap` values.
 */
enum EnsStatus ens_state_copy_s(const struct EnsState *state, double *buf, size_t cap);

/**
 * # Safety
 * `state` must be null or a handle from this library, freed at most once.
 */
void ens_state_free(struct EnsState *state);

/**
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum EnsStatus ens_observables(const struct EnsScenario *scenario,
                               const struct EnsState *state,
                               struct EnsObservables *out);

/**
 * Run the hydrodynamic and split-step solvers over the scenario and report
 * their worst agreement.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be valid for writes.
 */
enum EnsStatus ens_compare(const struct EnsScenario *scenario, struct EnsComparison *out);

/**
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum EnsStatus ens_config_parse(const char *text, struct EnsConfig **out);

/**
 * Execute a configuration, writing its files under `out_dir` (or the
 * configured directory when null). `exit_code` receives the command-line
 * exit status the run corresponds to.
 *
 * # Safety
 * `config` must be a live handle; `out_dir` null or NUL-terminated;
 * `exit_code` valid for writes.
 */
enum EnsStatus ens_config_run(const struct EnsConfig *config,
                              const char *out_dir,
                              int32_t *exit_code);

/**
 * # Safety
 * `config` must be null or a handle from this library, freed at most once.
 */
void ens_config_free(struct EnsConfig *config);

/**
 * Run the default axiom suite with `seed`; `all_pass` may be null.
 *
 * # Safety
 * `out` must be valid for writes; `all_pass` null or valid for writes.
 */
enum EnsStatus ens_axioms_run(uint64_t seed, struct EnsAxioms **out, bool *all_pass);

/**
 * # Safety
 * `axioms` must be null or a live handle.
 */
size_t ens_axioms_count(const struct EnsAxioms *axioms);

/**
 * # Safety
 * `axioms` must be a live handle; `out` must be valid for writes.
 */
enum EnsStatus ens_axioms_get(const struct EnsAxioms *axioms,
                              size_t index,
                              struct EnsAxiomResult *out);

/**
 * Copy the name of check `index`; returns its length plus one, or 0 when out of range.
 *
 * # Safety
 * `axioms` must be null or a live handle; `buf` null or valid for `cap` bytes.
 */
size_t ens_axioms_name(const struct EnsAxioms *axioms, size_t index, char *buf, size_t cap);

/**
 * # Safety
 * `axioms` must be null or a handle from this library, freed at most once.
 */
void ens_axioms_free(struct EnsAxioms *axioms);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENSEMBLE_H */
