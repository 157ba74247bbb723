/* bmx - minimum-cost perfect bipartite b-matching solver and reductions.
 *
 * C API over the solver core: opaque handles, integer status codes, rational
 * values passed as decimal/fraction strings. All functions are
 * single-threaded per handle; distinct handles may be used concurrently.
 */
#ifndef BMX_H
#define BMX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  BMX_OK = 0,
  BMX_ERR_IO = 1,
  BMX_ERR_PARSE = 2,
  BMX_ERR_INVALID = 3,
  BMX_ERR_SOLVE = 4
} bmx_status;

typedef enum {
  BMX_SOL_OPTIMAL = 0,
  BMX_SOL_INFEASIBLE = 1,
  BMX_SOL_NEG_INFINITE = 2,
  BMX_SOL_NEGATIVE_CYCLE = 3,
  BMX_SOL_TRIALS_EXHAUSTED = 4,
  BMX_SOL_ERROR = 5
} bmx_solution_status;

typedef enum {
  BMX_MODE_PRACTICAL = 0,
  BMX_MODE_PAPER = 1,
  BMX_MODE_EXACT_STEP = 2
} bmx_mode;

typedef struct bmx_instance bmx_instance;
typedef struct bmx_solution bmx_solution;

typedef struct bmx_config {
  uint64_t seed;
  int mode;             /* bmx_mode */
  double eps;           /* centering parameter */
  double phi;           /* expander conductance target */
  double c_lambda, c_gamma, c_r, sample_c;
  int max_phase_retries;
  int trials;           /* rounding trials; 0 = ceil(8 ln n) */
  int sssp_source;      /* 1-indexed source node for sssp */
  const char* trace_path; /* NULL = no trace */
  const char* ot_eps;   /* additive accuracy for ot, rational string */
} bmx_config;

void bmx_config_init(bmx_config* cfg);
const char* bmx_version(void);
/* Message for the most recent failing call on this thread. */
const char* bmx_last_error(void);

bmx_status bmx_parse_dimacs(const char* path, bmx_instance** out);
bmx_status bmx_parse_matching(const char* path, bmx_instance** out);
bmx_status bmx_parse_ot(const char* path, bmx_instance** out);
bmx_status bmx_instance_write(const bmx_instance* inst, const char* path);
void bmx_instance_free(bmx_instance* inst);

/* Solvers; each requires the matching instance kind. */
bmx_status bmx_solve_matching(const bmx_instance*, const bmx_config*, bmx_solution**);
bmx_status bmx_solve_transshipment(const bmx_instance*, const bmx_config*, bmx_solution**);
bmx_status bmx_solve_sssp(const bmx_instance*, const bmx_config*, bmx_solution**);
bmx_status bmx_solve_mmc(const bmx_instance*, const bmx_config*, bmx_solution**);
bmx_status bmx_solve_ot(const bmx_instance*, const bmx_config*, bmx_solution**);

void bmx_solution_free(bmx_solution* sol);
bmx_solution_status bmx_solution_get_status(const bmx_solution* sol);
/* Objective / value / mean as a rational string; NULL when not applicable. */
const char* bmx_solution_objective(const bmx_solution* sol);
long long bmx_solution_iterations(const bmx_solution* sol);

/* Sparse entries of the answer: flows (u, v, value), coupling cells, or
 * per-node distances for sssp (u = node, v = -1). */
size_t bmx_solution_nnz(const bmx_solution* sol);
bmx_status bmx_solution_entry(const bmx_solution* sol, size_t idx, int* u, int* v,
                              char* value, size_t value_len);
bmx_status bmx_solution_write(const bmx_solution* sol, const char* path);

/* Exact reference solve of the same instance (successive shortest paths /
 * Bellman-Ford / Karp); objective written as a rational string. Returns the
 * reference status in *status. */
bmx_status bmx_oracle_solve(const bmx_instance* inst, const bmx_config* cfg,
                            bmx_solution_status* status, char* objective, size_t len);

#ifdef __cplusplus
}
#endif

#endif /* BMX_H */
