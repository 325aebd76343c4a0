#ifndef STGCS_H
#define STGCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StgcsMethod {
  STGCS_METHOD_SP = 0,
  STGCS_METHOD_RP = 1,
  STGCS_METHOD_PBS = 2,
} StgcsMethod;

typedef enum StgcsSolver {
  STGCS_SOLVER_HEURISTIC = 0,
  STGCS_SOLVER_EXHAUSTIVE = 1,
} StgcsSolver;

/**
 * Result code of every fallible call.
 */
typedef enum StgcsStatus {
  STGCS_STATUS_OK = 0,
  STGCS_STATUS_NULL_POINTER = 1,
  STGCS_STATUS_INVALID_INPUT = 2,
  /**
   * The planner ran but found no solution, or a solution failed validation.
   */
  STGCS_STATUS_PLANNING_FAILED = 3,
  STGCS_STATUS_SOLVER_ERROR = 4,
  STGCS_STATUS_PANIC = 5,
} StgcsStatus;

/**
 * Parsed instance (opaque).
 */
typedef struct StgcsInstance StgcsInstance;

/**
 * Planned trajectories with metrics (opaque).
 */
typedef struct StgcsSolution StgcsSolution;

/**
 * Planner settings. Start from [`stgcs_plan_options_default`].
 */
typedef struct StgcsPlanOptions {
  enum StgcsMethod method;
  enum StgcsSolver solver;
  uint64_t seed;
  double budget_s;
  double eps;
  /**
   * 0 selects the automatic budget.
   */
  uintptr_t path_budget;
} StgcsPlanOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the
 * library; valid until the next failing call on this thread.
 */
const char *stgcs_last_error(void);

/**
 * Library version as a static string.
 */
const char *stgcs_version(void);

struct StgcsPlanOptions stgcs_plan_options_default(void);

/**
 * Parses an instance from a JSON string.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StgcsStatus stgcs_instance_from_json(const char *json, struct StgcsInstance **out);

/**
 * Reads an instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StgcsStatus stgcs_instance_load(const char *path, struct StgcsInstance **out);

/**
 * Number of robots, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
uintptr_t stgcs_instance_num_robots(const struct StgcsInstance *inst);

/**
 * # Safety
 * `inst` must be null or a handle not yet freed.
 */
void stgcs_instance_free(struct StgcsInstance *inst);

/**
 * Plans every robot of `inst`. On `PlanningFailed` no solution is written.
 *
 * # Safety
 * `inst` must be a live handle, `opts` null (defaults) or valid, `out` valid.
 */
enum StgcsStatus stgcs_plan(const struct StgcsInstance *inst,
                            const struct StgcsPlanOptions *opts,
                            struct StgcsSolution **out);

/**
 * Parses a solution JSON as written by [`stgcs_solution_to_json`].
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StgcsStatus stgcs_solution_from_json(const char *json, struct StgcsSolution **out);

/**
 * Sum of costs, or NaN for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
double stgcs_solution_soc(const struct StgcsSolution *sol);

/**
 * Makespan, or NaN for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
double stgcs_solution_makespan(const struct StgcsSolution *sol);

/**
 * Solution as a JSON string; release it with [`stgcs_string_free`].
 * Null on failure.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
char *stgcs_solution_to_json(const struct StgcsSolution *sol);

/**
 * Checks a solution against an instance. `Ok` when valid,
 * `PlanningFailed` with a message listing the first violation otherwise.
 *
 * # Safety
 * Both handles must be live.
 */
enum StgcsStatus stgcs_validate(const struct StgcsInstance *inst, const struct StgcsSolution *sol);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void stgcs_solution_free(struct StgcsSolution *sol);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void stgcs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STGCS_H */
