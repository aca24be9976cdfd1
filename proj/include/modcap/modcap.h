/* C interface to the modcap library. All functions return a status code;
 * on failure modcap_last_error() describes the problem (thread-local).
 * Strings returned through char** must be released with modcap_string_free. */
#ifndef MODCAP_MODCAP_H
#define MODCAP_MODCAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum modcap_status {
  MODCAP_OK = 0,
  MODCAP_INVALID_INPUT = 2,
  MODCAP_NO_CONVERGENCE = 3,
  MODCAP_CERTIFICATE_FAILED = 4,
  MODCAP_IO = 5,
  MODCAP_NO_BARYCENTER = 6,
  MODCAP_CONSTANT_CURVE = 7,
  MODCAP_CAP_EXCEEDED = 8,
  MODCAP_INTERNAL = 9
} modcap_status;

typedef struct modcap_instance modcap_instance;
typedef struct modcap_solution modcap_solution;

typedef struct modcap_solve_options {
  double gap_tol;  /* relative primal-dual gap, <= 0 for the default 1e-12 */
  size_t max_iter; /* 0 for the default 100000 */
} modcap_solve_options;

const char* modcap_last_error(void);
/* Process exit code for a status: 0, 2 (invalid input), 3 or 4. */
int modcap_exit_code(modcap_status status);
void modcap_string_free(char* s);

modcap_status modcap_instance_load(const char* path, modcap_instance** out);
modcap_status modcap_instance_parse(const char* text, modcap_instance** out);
modcap_status modcap_instance_generate(uint64_t seed, size_t n_points, size_t n_measures,
                                       double sparsity, modcap_instance** out);
modcap_status modcap_instance_serialize(const modcap_instance* inst, char** out);
const char* modcap_instance_name(const modcap_instance* inst);
size_t modcap_instance_points(const modcap_instance* inst);
void modcap_instance_free(modcap_instance* inst);

/* Modulus of a named family (explicit, paths or curves). */
modcap_status modcap_solve(const modcap_instance* inst, const char* family, double p,
                           const modcap_solve_options* opts, modcap_solution** out);
double modcap_solution_value(const modcap_solution* sol);
double modcap_solution_dual_value(const modcap_solution* sol);
double modcap_solution_gap(const modcap_solution* sol);
size_t modcap_solution_iterations(const modcap_solution* sol);
size_t modcap_solution_active(const modcap_solution* sol);
int modcap_solution_empty_family(const modcap_solution* sol);
/* Copies min(len, size) density entries into buf; returns the size. */
size_t modcap_solution_density(const modcap_solution* sol, double* buf, size_t len);
void modcap_solution_free(modcap_solution* sol);

/* Appends results of the given solutions; path NULL or "-" writes to stdout.
 * format is "csv" or "ndjson". */
modcap_status modcap_results_write(const modcap_solution* const* sols, size_t n, const char* path,
                                   const char* format, uint64_t seed);

/* Modulus and content of a family with the duality certificate and the
 * optimality report (JSON). Returns MODCAP_CERTIFICATE_FAILED when either
 * check fails; the report is filled in that case too. plan_json may be NULL. */
modcap_status modcap_duality(const modcap_instance* inst, const char* family, double p,
                             const modcap_solve_options* opts, char** report_json,
                             char** plan_json);

/* op: "resample" (constant-speed representative), "jmap", "mmap", "mult". */
modcap_status modcap_curve_op(const modcap_instance* inst, const char* curve, const char* op,
                              char** out_json);

/* op: "check", "improve" (uses q, eps) or "stretch" (uses eps, n_tau).
 * plan_out (may be NULL) receives the resulting plan for improve/stretch. */
modcap_status modcap_plan_op(const modcap_instance* inst, const char* plan, const char* op,
                             double q, double eps, size_t n_tau, char** report_json,
                             char** plan_out);

/* Upper-gradient check of the columns f_col, g_col along a family's curves
 * (paths or curves kind) and the listed plans. */
modcap_status modcap_grad_check(const modcap_instance* inst, const char* f_col, const char* g_col,
                                const char* family, const char* const* plans, size_t n_plans,
                                double p, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
