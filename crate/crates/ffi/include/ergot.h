#ifndef ERGOT_H
#define ERGOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ErgotStatus {
  ERGOT_STATUS_OK = 0,
  ERGOT_STATUS_NULL_POINTER = 1,
  ERGOT_STATUS_INVALID_UTF8 = 2,
  // Malformed problem or arguments.
  ERGOT_STATUS_INPUT_ERROR = 3,
  // A marginal is outside its simplex or charges transient states.
  ERGOT_STATUS_NOT_IN_SIMPLEX = 4,
  // The restricted problem has no feasible plan.
  ERGOT_STATUS_INFEASIBLE = 5,
  ERGOT_STATUS_NOT_GEOMETRIC = 6,
  ERGOT_STATUS_BUFFER_TOO_SMALL = 7,
  ERGOT_STATUS_PANIC = 8,
} ErgotStatus;

// Optimal plan returned by [`ergot_solve`].
typedef struct ErgotPlan ErgotPlan;

// Parsed problem file.
typedef struct ErgotProblem ErgotProblem;

// Both sides of the decomposition equality for a problem.
typedef struct ErgotDecomposition {
  double lhs;
  double rhs;
  double gap;
  double unconstrained;
} ErgotDecomposition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *ergot_last_error(void);

// Library version as a static NUL-terminated string.
const char *ergot_version(void);

// Parses a problem document.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a writable
// pointer. On success `*out` owns a problem that must be released with
// [`ergot_problem_free`].
enum ErgotStatus ergot_problem_from_json(const char *json, struct ErgotProblem **out);

// # Safety
// `problem` must be NULL or a pointer from [`ergot_problem_from_json`]
// that has not been freed.
void ergot_problem_free(struct ErgotProblem *problem);

// Number of points of the problem's space, 0 for NULL.
//
// # Safety
// `problem` must be NULL or a live problem handle.
uintptr_t ergot_problem_size(const struct ErgotProblem *problem);

// Solves the restricted transport problem with the problem's cost (or its
// metric raised to the problem's exponent).
//
// # Safety
// `problem` must be a live problem handle and `out` a writable pointer. On
// success `*out` owns a plan released with [`ergot_plan_free`].
enum ErgotStatus ergot_solve(const struct ErgotProblem *problem, struct ErgotPlan **out);

// # Safety
// `plan` must be NULL or a pointer from [`ergot_solve`] that has not been
// freed.
void ergot_plan_free(struct ErgotPlan *plan);

// Optimal cost of the plan, NaN for NULL.
//
// # Safety
// `plan` must be NULL or a live plan handle.
double ergot_plan_value(const struct ErgotPlan *plan);

// Writes the plan's row and column counts.
//
// # Safety
// `plan` must be a live plan handle; `rows` and `cols` writable pointers.
enum ErgotStatus ergot_plan_shape(const struct ErgotPlan *plan, uintptr_t *rows, uintptr_t *cols);

// Copies the plan row-major into `buf`, which must hold `rows * cols`
// values.
//
// # Safety
// `plan` must be a live plan handle and `buf` writable for `len` doubles.
enum ErgotStatus ergot_plan_copy(const struct ErgotPlan *plan, double *buf, uintptr_t len);

// Restricted Wasserstein distance between the problem's marginals under
// its metric. Infeasible pairs give `+∞` with status OK.
//
// # Safety
// `problem` must be a live problem handle and `out` a writable pointer.
enum ErgotStatus ergot_wasserstein(const struct ErgotProblem *problem, double p, double *out);

// Solves the problem directly and through its extreme-point decomposition.
//
// # Safety
// `problem` must be a live problem handle and `out` a writable pointer.
enum ErgotStatus ergot_verify_decomposition(const struct ErgotProblem *problem,
                                            struct ErgotDecomposition *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ERGOT_H */
