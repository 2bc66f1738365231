// Stochastic network-calculus engine. Service and arrival processes are
// described by envelope rates rho(theta) derived from moment generating
// functions; waiting/sojourn quantile bounds follow from Chernoff-style
// arguments optimized over the free parameter theta.
//
// All functions are unit-agnostic: pass rates in any consistent unit and
// the returned times are in the matching inverse unit.
#pragma once

#include <functional>
#include <string>
#include <utility>

namespace parq::snc {

// --- envelope rates ------------------------------------------------------

// Exponential inter-arrival envelope rho_A(-theta), theta > 0. Decreases
// from the mean inter-arrival time toward zero.
double rho_arrival_exp(double lambda, double theta);

// Exponential service envelope rho_S(theta), 0 < theta < mu. Increases
// from the mean service time.
double rho_service_exp(double mu, double theta);

// Envelope rate of the residual drain time after the last task of a job
// starts: the max of l exponential residual service times. 0 < theta < mu.
double rho_residual_max(int l, double mu, double theta);

// Envelope rate of the gap until the next of l busy exponential workers
// frees up (min of l residuals, i.e. Exp(l*mu)). 0 < theta < l*mu.
double rho_next_free(int l, double mu, double theta);

struct Envelope {
    std::function<double(double)> rho;
    double theta_max = 0.0;  // exclusive supremum of the valid domain
    std::string label;

    double operator()(double theta) const { return rho(theta); }
};

Envelope add(const Envelope& a, const Envelope& b);
Envelope scaled(const Envelope& e, double factor);
Envelope shifted(const Envelope& e, double constant);  // adds a deterministic term

Envelope arrival_exp_envelope(double lambda);       // theta_max = +inf
Envelope service_exp_envelope(double mu);           // theta_max = mu
Envelope ideal_partition_envelope(int l, int k, double mu);  // theta_max = l*mu

// Split-merge service envelope with k >= l tasks per job:
// rho_S = rho_residual_max + (k - l) * rho_next_free, valid on (0, mu).
// k = l recovers the conventional split-merge envelope.
Envelope split_merge_envelope(int l, int k, double mu);

// Mean job service time of the same model: (1/mu) * (k/l + sum_{i=2}^l 1/i).
double split_merge_mean_job_service(int l, int k, double mu);

// Max stable utilization of split-merge with tasks-per-worker ratio kappa:
// 1 / (1 + (1/kappa) * sum_{i=2}^l 1/i).
double split_merge_max_utilization(int l, double kappa);

// --- Erlang numerics -----------------------------------------------------

// P[Erlang(shape, rate) <= x]
double erlang_cdf(int shape, double rate, double x);

// E[max of l iid Erlang(shape, rate)] via CCDF quadrature.
// Relative error <= 1e-8; throws std::runtime_error on non-convergence.
double erlang_max_mean(int l, int shape, double rate);

// E[exp(theta * max of l iid Erlang(shape, rate))] for 0 < theta < rate,
// via quadrature after substituting u = ln(x)/theta. Returns +infinity when
// the value exceeds the representable range (theta close to rate).
double erlang_max_mgf(int l, int shape, double rate, double theta);

// Service envelope of split-merge with k = l Erlang(shape, mu) tasks:
// rho(theta) = ln(erlang_max_mgf)/theta on (0, mu).
Envelope erlang_split_merge_envelope(int l, int shape, double mu);

// Max stable utilization of the k = l Erlang-task split-merge model,
// kappa / (mu * E[max]); independent of mu.
double split_merge_max_utilization_erlang(int l, int shape);

// --- quantile bounds ------------------------------------------------------

enum class Metric { Waiting, Sojourn };

struct BoundResult {
    bool feasible = false;
    double theta_star = 0.0;
    double tau = 0.0;      // quantile bound; meaningful only when feasible
    double epsilon = 0.0;
};

// Minimizes tau(theta) = prefix(theta) - ln(epsilon)/theta over theta with
// constraint.rho(theta) <= arrival.rho(theta) and theta below both
// constraint.theta_max and prefix_theta_max. The feasibility boundary is
// isolated by bisection, the objective by golden-section search.
BoundResult optimize_bound(const Envelope& constraint, const Envelope& arrival,
                           const std::function<double(double)>& prefix,
                           double prefix_theta_max, double epsilon);

// Single max-plus server: P[W > tau] <= e^{-theta tau},
// P[T > tau] <= e^{theta rho_S} e^{-theta tau} for rho_S(theta) <= rho_A(-theta).
BoundResult single_server_bound(const Envelope& service, const Envelope& arrival,
                                double epsilon, Metric metric);

// Conventional fork-join (k = l, per-server queues): union bound over the
// per-server sojourn times, P[T > tau] <= l e^{theta rho_Q} e^{-theta tau}.
BoundResult fork_join_conventional_bound(int l, double lambda, double mu,
                                         double epsilon, Metric metric);

// Per-task mean overheads folded into the envelope terms. In the same time
// unit as 1/mu.
struct OverheadTerms {
    double task_mean = 0.0;  // constant + mean of the exponential component
    double pre_job = 0.0;
    double pre_task = 0.0;
};

// Overhead-adjusted drain/gap envelopes: the drain term absorbs the full
// per-task overhead mean, the gap term a 1/l share of it.
std::pair<Envelope, Envelope> overhead_adjusted_envelopes(int l, double mu,
                                                          double task_overhead_mean);

// Single-queue fork-join with k >= l tasks (in-sequence departures):
//   P[W_i >= tau] <= e^{theta (i-1) rho_Z} e^{-theta tau}
//   P[T >= tau]   <= e^{theta ((k-1) rho_Z + rho_X)} e^{-theta tau}
// for theta in (0, mu) with k * rho_Z(theta) <= rho_A(-theta).
// task_index selects i for the waiting metric; 0 means the last task.
BoundResult sq_fork_join_bound(int l, int k, double lambda, double mu, double epsilon,
                               Metric metric, int task_index = 0);

// Same computation with overhead-adjusted envelopes; the pre-departure
// constant is added to the sojourn quantile afterwards. An approximation
// rather than a strict bound. Zero overhead reproduces sq_fork_join_bound
// exactly (identical code path).
BoundResult sq_fork_join_overhead_approx(int l, int k, double lambda, double mu,
                                         const OverheadTerms& overhead, double epsilon,
                                         Metric metric, int task_index = 0);

// Split-merge quantile bound (k >= l tiny tasks), via the split-merge
// envelope and the single-server bound.
BoundResult split_merge_bound(int l, int k, double lambda, double mu, double epsilon,
                              Metric metric);

// Split-merge approximation with overhead: the pre-departure term blocks
// the next job, so it is folded into the drain envelope instead of being
// added after the fact.
BoundResult split_merge_overhead_approx(int l, int k, double lambda, double mu,
                                        const OverheadTerms& overhead, double epsilon,
                                        Metric metric);

// Ideal l-way equal partition of the same workload, served like a single
// server; the reference system the tiny-task bounds approach for large k.
BoundResult ideal_partition_bound(int l, int k, double lambda, double mu,
                                  double epsilon, Metric metric);

}  // namespace parq::snc
