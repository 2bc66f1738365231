/* parq - parallel queueing simulation and performance bounds.
 *
 * C interface to the simulation core, the envelope/bound calculator and the
 * experiment drivers. Handles are opaque; every fallible call returns a
 * pq_status and a per-thread detail message is available from
 * pq_last_error().
 *
 * Unit conventions at this interface: durations in milliseconds, rates in
 * events per second. The pq_rho_* / pq_erlang_* math kernels are the
 * exception: they are unit-agnostic and return times in the inverse unit of
 * the rates passed in.
 */
#ifndef PARQ_H
#define PARQ_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pq_status {
    PQ_OK = 0,
    PQ_ERR_INVALID = 1,        /* invalid argument or configuration */
    PQ_ERR_DOMAIN = 2,         /* parameter outside a math domain */
    PQ_ERR_IO = 3,             /* file could not be read or written */
    PQ_ERR_NO_CONVERGENCE = 4, /* numerical routine failed to converge */
    PQ_ERR_INTERNAL = 5
} pq_status;

typedef enum pq_model {
    PQ_MODEL_SPLIT_MERGE = 0,
    PQ_MODEL_SINGLE_QUEUE_FORK_JOIN = 1,
    PQ_MODEL_FORK_JOIN = 2
} pq_model;

typedef enum pq_bound_model {
    PQ_BOUND_MM1 = 0,             /* single exponential server */
    PQ_BOUND_SPLIT_MERGE = 1,     /* split-merge, k >= l exponential tasks */
    PQ_BOUND_SQ_FORK_JOIN = 2,    /* single-queue fork-join, k >= l tasks */
    PQ_BOUND_FORK_JOIN_CONV = 3,  /* conventional fork-join, k = l */
    PQ_BOUND_IDEAL_PARTITION = 4, /* l-way equal partition reference */
    PQ_BOUND_SPLIT_MERGE_ERLANG = 5 /* split-merge, k = l Erlang tasks */
} pq_bound_model;

typedef enum pq_metric { PQ_METRIC_WAITING = 0, PQ_METRIC_SOJOURN = 1 } pq_metric;

/* Message describing the most recent failure on this thread. */
const char* pq_last_error(void);
const char* pq_version(void);

/* Stable 64-bit digest of arbitrary text, as 16 hex chars + NUL. */
void pq_digest_hex(const char* text, char out[17]);

/* --- simulation configuration (opaque) --------------------------------- */

typedef struct pq_config pq_config;

pq_config* pq_config_new(void);
void pq_config_free(pq_config* cfg);
pq_status pq_config_set_model(pq_config* cfg, pq_model model);
pq_status pq_config_set_workers(pq_config* cfg, int l);
pq_status pq_config_set_tasks_per_job(pq_config* cfg, int k);
/* Distribution grammar: exp:<rate/s>, erlang:<shape>:<rate/s>, det:<ms>,
 * sexp:<shift_ms>:<rate/s>. */
pq_status pq_config_set_arrival(pq_config* cfg, const char* dist);
pq_status pq_config_set_task_execution(pq_config* cfg, const char* dist);
pq_status pq_config_set_overhead(pq_config* cfg, double c_ts_task_ms,
                                 double mu_ts_task_per_s, double c_pd_job_ms,
                                 double c_pd_task_ms);
pq_status pq_config_set_jobs(pq_config* cfg, long n_jobs);
pq_status pq_config_set_seed(pq_config* cfg, uint64_t seed);
pq_status pq_config_set_in_sequence(pq_config* cfg, int enabled);
pq_status pq_config_set_warmup(pq_config* cfg, long warmup_jobs);
pq_status pq_config_set_record_tasks(pq_config* cfg, int enabled);
pq_status pq_config_validate(const pq_config* cfg);
pq_status pq_config_digest(const pq_config* cfg, char out[17]);

/* --- simulation --------------------------------------------------------- */

typedef struct pq_result pq_result;

pq_status pq_simulate(const pq_config* cfg, pq_result** out);
void pq_result_free(pq_result* res);
long pq_result_job_count(const pq_result* res);
pq_status pq_result_sojourn_quantile(const pq_result* res, double q, double* out_ms);
pq_status pq_result_mean_sojourn(const pq_result* res, double* out_ms);
pq_status pq_result_mean_waiting(const pq_result* res, double* out_ms);
pq_status pq_result_mean_service(const pq_result* res, double* out_ms);
int pq_result_stable(const pq_result* res);
pq_status pq_result_write_jobs_csv(const pq_result* res, const char* path);
pq_status pq_result_write_tasks_csv(const pq_result* res, const char* path);
pq_status pq_result_write_summary_json(const pq_result* res, const char* path);

/* Classifies each utilization grid point; out_stable[i] is 1/0 after the
 * monotone cleanup (stable prefix, unstable suffix). */
pq_status pq_stability_scan(const pq_config* base, const double* utilizations,
                            size_t n, int* out_stable);
/* Max stable utilization by bisection at better than 0.01 resolution. */
pq_status pq_max_stable_utilization(const pq_config* base, double* out);

/* --- envelope / bound kernels (unit-agnostic) --------------------------- */

pq_status pq_rho_arrival_exp(double lambda, double theta, double* out);
pq_status pq_rho_service_exp(double mu, double theta, double* out);
pq_status pq_rho_residual_max(int l, double mu, double theta, double* out);
pq_status pq_rho_next_free(int l, double mu, double theta, double* out);
pq_status pq_split_merge_rho(int l, int k, double mu, double theta, double* out);
pq_status pq_split_merge_mean_job_service(int l, int k, double mu, double* out);
pq_status pq_split_merge_max_utilization(int l, double kappa, double* out);
pq_status pq_split_merge_max_utilization_erlang(int l, int shape, double* out);
pq_status pq_erlang_cdf(int shape, double rate, double x, double* out);
pq_status pq_erlang_max_mean(int l, int shape, double rate, double* out);
pq_status pq_erlang_max_mgf(int l, int shape, double rate, double theta, double* out);

/* --- quantile bounds ----------------------------------------------------- */

typedef struct pq_overhead {
    double c_ts_task_ms;
    double mu_ts_task_per_s;
    double c_pd_job_ms;
    double c_pd_task_ms;
} pq_overhead;

typedef struct pq_bound_result {
    int feasible;
    double theta_star; /* per second */
    double tau_ms;     /* quantile bound; meaningful when feasible */
} pq_bound_result;

/* Rates per second, tau in ms. `overhead` may be NULL (none). For
 * PQ_BOUND_SQ_FORK_JOIN waiting, task_index picks the task (0 = last).
 * For PQ_BOUND_SPLIT_MERGE_ERLANG, erlang_shape is the task shape.
 * An unstable configuration is reported as feasible = 0, not an error. */
pq_status pq_bound(pq_bound_model model, pq_metric metric, int l, int k,
                   double lambda_per_s, double mu_per_s, double epsilon,
                   const pq_overhead* overhead, int task_index, int erlang_shape,
                   pq_bound_result* out);

/* Bound sweep over k: CSV `k,epsilon,theta_star,tau_ms,feasible`. When
 * mu_per_s <= 0 the task rate is re-derived per k from the constant
 * per-worker workload (workload_ms). */
pq_status pq_bound_sweep_csv(pq_bound_model model, pq_metric metric, int l,
                             const int* k_values, size_t nk, double lambda_per_s,
                             double mu_per_s, double workload_ms, const double* epsilons,
                             size_t neps, const pq_overhead* overhead,
                             const char* csv_path);

/* --- experiment drivers -------------------------------------------------- */

/* Sweep rows pair a simulation with the matching analytical bound.
 * vary is "k", "lambda" or "l"; when mu_per_s <= 0 and vary != "lambda",
 * task rates follow the constant-workload rule. */
pq_status pq_run_sweep_csv(const pq_config* base, const char* vary,
                           const double* values, size_t nvalues, const double* epsilons,
                           size_t neps, int compare_analytical, double workload_ms,
                           int mu_pinned, int threads, const char* csv_path);

/* Simulated + analytical split-merge stability curve over k:
 * CSV `k,kappa,rho_max_sim,rho_max_tiny,rho_max_big,status`. */
pq_status pq_stability_curve_csv(const pq_config* base, const int* k_values, size_t nk,
                                 int threads, const char* csv_path);

/* Analytical table over l at fixed kappa: CSV `l,kappa,rho_max_tiny,rho_max_big`. */
pq_status pq_stability_analytic_csv(const int* l_values, size_t nl, double kappa,
                                    const char* csv_path);

typedef struct pq_overhead_fit {
    double c_ts_task_ms;
    double mu_ts_task_per_s;
    double c_pd_job_ms;
    double c_pd_task_ms;
    int slope_undetermined; /* jobs cover a single k: per-task slope set to 0 */
} pq_overhead_fit;

/* Fits the four overhead parameters from task/job CSV exports (several
 * files of each kind may be concatenated). Optionally writes a JSON report
 * including residual statistics. */
pq_status pq_fit_overhead(const char* const* tasks_csvs, size_t n_tasks_csvs,
                          const char* const* jobs_csvs, size_t n_jobs_csvs,
                          pq_overhead_fit* out, const char* report_json_path);

/* Validates a jobs (and optional tasks) CSV pair; writes a row-count and
 * rejection report as JSON when report_json_path is non-NULL. */
pq_status pq_trace_validate(const char* jobs_csv, const char* tasks_csv,
                            const char* report_json_path, long* out_jobs,
                            long* out_tasks, long* out_rejected);

/* PP plot + quantile deltas of two sojourn samples taken from jobs CSVs.
 * Writes `f_a,f_b` pairs and a JSON table of quantile differences. */
pq_status pq_compare(const char* jobs_csv_a, const char* jobs_csv_b, int grid_size,
                     const char* pp_csv_path, const char* deltas_json_path);

#ifdef __cplusplus
}
#endif

#endif /* PARQ_H */
