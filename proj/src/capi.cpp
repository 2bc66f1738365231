#include "parq.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>

#include "parq/calculus.hpp"
#include "parq/experiments.hpp"
#include "parq/simulator.hpp"
#include "parq/stochastic.hpp"

using parq::Distribution;
using parq::EmpiricalSample;

namespace {

thread_local std::string g_last_error;

pq_status fail(pq_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

// Maps C++ exceptions onto status codes; the catch-all keeps exceptions
// from crossing the C boundary.
template <typename Fn>
pq_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::domain_error& e) {
        return fail(PQ_ERR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(PQ_ERR_INVALID, e.what());
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        if (what.find("converge") != std::string::npos)
            return fail(PQ_ERR_NO_CONVERGENCE, what);
        return fail(PQ_ERR_IO, what);
    } catch (const std::bad_alloc&) {
        return fail(PQ_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PQ_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PQ_ERR_INTERNAL, "unknown error");
    }
}

pq_status require_out(const void* p) {
    return p ? PQ_OK : fail(PQ_ERR_INVALID, "null output pointer");
}

template <typename Fn>
pq_status eval_to(double* out, Fn&& fn) {
    if (pq_status s = require_out(out); s != PQ_OK) return s;
    return guarded([&] {
        *out = fn();
        return PQ_OK;
    });
}

parq::snc::OverheadTerms terms_ms(const pq_overhead* ovh) {
    parq::snc::OverheadTerms t;
    if (ovh) {
        t.task_mean = ovh->c_ts_task_ms +
                      (ovh->mu_ts_task_per_s > 0 ? 1000.0 / ovh->mu_ts_task_per_s : 0.0);
        t.pre_job = ovh->c_pd_job_ms;
        t.pre_task = ovh->c_pd_task_ms;
    }
    return t;
}

}  // namespace

struct pq_config {
    parq::sim::SystemConfig cfg;
};

struct pq_result {
    parq::sim::SimResult res;
};

extern "C" {

const char* pq_last_error(void) { return g_last_error.c_str(); }

const char* pq_version(void) { return "parq 0.1.0"; }

void pq_digest_hex(const char* text, char out[17]) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* p = text; p && *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 0x100000001b3ULL;
    }
    std::snprintf(out, 17, "%016llx", static_cast<unsigned long long>(h));
}

pq_config* pq_config_new(void) {
    try {
        return new pq_config();
    } catch (...) {
        return nullptr;
    }
}

void pq_config_free(pq_config* cfg) { delete cfg; }

#define PQ_REQUIRE_CFG(cfg) \
    if (!(cfg)) return fail(PQ_ERR_INVALID, "null config handle")

pq_status pq_config_set_model(pq_config* cfg, pq_model model) {
    PQ_REQUIRE_CFG(cfg);
    switch (model) {
        case PQ_MODEL_SPLIT_MERGE: cfg->cfg.model = parq::sim::Model::SplitMerge; break;
        case PQ_MODEL_SINGLE_QUEUE_FORK_JOIN:
            cfg->cfg.model = parq::sim::Model::SingleQueueForkJoin;
            break;
        case PQ_MODEL_FORK_JOIN: cfg->cfg.model = parq::sim::Model::ForkJoin; break;
        default: return fail(PQ_ERR_INVALID, "model: unknown enum value");
    }
    return PQ_OK;
}

pq_status pq_config_set_workers(pq_config* cfg, int l) {
    PQ_REQUIRE_CFG(cfg);
    if (l < 1) return fail(PQ_ERR_INVALID, "l: worker count must be >= 1");
    cfg->cfg.workers = l;
    return PQ_OK;
}

pq_status pq_config_set_tasks_per_job(pq_config* cfg, int k) {
    PQ_REQUIRE_CFG(cfg);
    if (k < 1) return fail(PQ_ERR_INVALID, "k: tasks per job must be >= 1");
    cfg->cfg.tasks_per_job = k;
    return PQ_OK;
}

pq_status pq_config_set_arrival(pq_config* cfg, const char* dist) {
    PQ_REQUIRE_CFG(cfg);
    return guarded([&] {
        cfg->cfg.arrival = Distribution::parse(dist ? dist : "");
        return PQ_OK;
    });
}

pq_status pq_config_set_task_execution(pq_config* cfg, const char* dist) {
    PQ_REQUIRE_CFG(cfg);
    return guarded([&] {
        cfg->cfg.task_execution = Distribution::parse(dist ? dist : "");
        return PQ_OK;
    });
}

pq_status pq_config_set_overhead(pq_config* cfg, double c_ts_task_ms,
                                 double mu_ts_task_per_s, double c_pd_job_ms,
                                 double c_pd_task_ms) {
    PQ_REQUIRE_CFG(cfg);
    return guarded([&] {
        parq::sim::OverheadParams p{c_ts_task_ms, mu_ts_task_per_s, c_pd_job_ms,
                                    c_pd_task_ms};
        p.validate();
        cfg->cfg.overhead = p;
        return PQ_OK;
    });
}

pq_status pq_config_set_jobs(pq_config* cfg, long n_jobs) {
    PQ_REQUIRE_CFG(cfg);
    if (n_jobs < 1) return fail(PQ_ERR_INVALID, "jobs: must simulate >= 1 job");
    cfg->cfg.n_jobs = n_jobs;
    return PQ_OK;
}

pq_status pq_config_set_seed(pq_config* cfg, uint64_t seed) {
    PQ_REQUIRE_CFG(cfg);
    cfg->cfg.seed = seed;
    return PQ_OK;
}

pq_status pq_config_set_in_sequence(pq_config* cfg, int enabled) {
    PQ_REQUIRE_CFG(cfg);
    cfg->cfg.in_sequence_departures = enabled != 0;
    return PQ_OK;
}

pq_status pq_config_set_warmup(pq_config* cfg, long warmup_jobs) {
    PQ_REQUIRE_CFG(cfg);
    if (warmup_jobs < 0) return fail(PQ_ERR_INVALID, "warmup: must be >= 0");
    cfg->cfg.warmup_jobs = warmup_jobs;
    return PQ_OK;
}

pq_status pq_config_set_record_tasks(pq_config* cfg, int enabled) {
    PQ_REQUIRE_CFG(cfg);
    cfg->cfg.record_tasks = enabled != 0;
    return PQ_OK;
}

pq_status pq_config_validate(const pq_config* cfg) {
    PQ_REQUIRE_CFG(cfg);
    return guarded([&] {
        cfg->cfg.validate();
        return PQ_OK;
    });
}

pq_status pq_config_digest(const pq_config* cfg, char out[17]) {
    PQ_REQUIRE_CFG(cfg);
    if (!out) return fail(PQ_ERR_INVALID, "null output pointer");
    std::string d = cfg->cfg.digest();
    std::memcpy(out, d.c_str(), 17);
    return PQ_OK;
}

pq_status pq_simulate(const pq_config* cfg, pq_result** out) {
    PQ_REQUIRE_CFG(cfg);
    if (pq_status s = require_out(out); s != PQ_OK) return s;
    return guarded([&] {
        auto res = std::make_unique<pq_result>();
        res->res = parq::sim::run(cfg->cfg);
        *out = res.release();
        return PQ_OK;
    });
}

void pq_result_free(pq_result* res) { delete res; }

#define PQ_REQUIRE_RES(res) \
    if (!(res)) return fail(PQ_ERR_INVALID, "null result handle")

long pq_result_job_count(const pq_result* res) {
    return res ? static_cast<long>(res->res.jobs.size()) : 0;
}

pq_status pq_result_sojourn_quantile(const pq_result* res, double q, double* out_ms) {
    PQ_REQUIRE_RES(res);
    if (pq_status s = require_out(out_ms); s != PQ_OK) return s;
    return guarded([&] {
        *out_ms = res->res.sojourn_sample().quantile(q);
        return PQ_OK;
    });
}

pq_status pq_result_mean_sojourn(const pq_result* res, double* out_ms) {
    PQ_REQUIRE_RES(res);
    if (pq_status s = require_out(out_ms); s != PQ_OK) return s;
    return guarded([&] {
        *out_ms = res->res.summary().mean_sojourn;
        return PQ_OK;
    });
}

pq_status pq_result_mean_waiting(const pq_result* res, double* out_ms) {
    PQ_REQUIRE_RES(res);
    if (pq_status s = require_out(out_ms); s != PQ_OK) return s;
    return guarded([&] {
        *out_ms = res->res.summary().mean_waiting;
        return PQ_OK;
    });
}

pq_status pq_result_mean_service(const pq_result* res, double* out_ms) {
    PQ_REQUIRE_RES(res);
    if (pq_status s = require_out(out_ms); s != PQ_OK) return s;
    return guarded([&] {
        *out_ms = res->res.summary().mean_service;
        return PQ_OK;
    });
}

int pq_result_stable(const pq_result* res) { return res && res->res.stable() ? 1 : 0; }

pq_status pq_result_write_jobs_csv(const pq_result* res, const char* path) {
    PQ_REQUIRE_RES(res);
    return guarded([&] {
        res->res.write_jobs_csv(path ? path : "");
        return PQ_OK;
    });
}

pq_status pq_result_write_tasks_csv(const pq_result* res, const char* path) {
    PQ_REQUIRE_RES(res);
    return guarded([&] {
        res->res.write_tasks_csv(path ? path : "");
        return PQ_OK;
    });
}

pq_status pq_result_write_summary_json(const pq_result* res, const char* path) {
    PQ_REQUIRE_RES(res);
    return guarded([&] {
        res->res.write_summary_json(path ? path : "");
        return PQ_OK;
    });
}

pq_status pq_stability_scan(const pq_config* base, const double* utilizations, size_t n,
                            int* out_stable) {
    PQ_REQUIRE_CFG(base);
    if (!utilizations || !out_stable) return fail(PQ_ERR_INVALID, "null array pointer");
    return guarded([&] {
        std::vector<double> grid(utilizations, utilizations + n);
        auto points = parq::sim::stability_scan(base->cfg, grid);
        for (size_t i = 0; i < points.size(); ++i) out_stable[i] = points[i].second ? 1 : 0;
        return PQ_OK;
    });
}

pq_status pq_max_stable_utilization(const pq_config* base, double* out) {
    PQ_REQUIRE_CFG(base);
    if (pq_status s = require_out(out); s != PQ_OK) return s;
    return guarded([&] {
        *out = parq::sim::max_stable_utilization(base->cfg);
        return PQ_OK;
    });
}

/* --- math kernels --------------------------------------------------------- */

pq_status pq_rho_arrival_exp(double lambda, double theta, double* out) {
    return eval_to(out, [&] { return parq::snc::rho_arrival_exp(lambda, theta); });
}

pq_status pq_rho_service_exp(double mu, double theta, double* out) {
    return eval_to(out, [&] { return parq::snc::rho_service_exp(mu, theta); });
}

pq_status pq_rho_residual_max(int l, double mu, double theta, double* out) {
    return eval_to(out, [&] { return parq::snc::rho_residual_max(l, mu, theta); });
}

pq_status pq_rho_next_free(int l, double mu, double theta, double* out) {
    return eval_to(out, [&] { return parq::snc::rho_next_free(l, mu, theta); });
}

pq_status pq_split_merge_rho(int l, int k, double mu, double theta, double* out) {
    return eval_to(out, [&] { return parq::snc::split_merge_envelope(l, k, mu)(theta); });
}

pq_status pq_split_merge_mean_job_service(int l, int k, double mu, double* out) {
    return eval_to(out, [&] { return parq::snc::split_merge_mean_job_service(l, k, mu); });
}

pq_status pq_split_merge_max_utilization(int l, double kappa, double* out) {
    return eval_to(out, [&] { return parq::snc::split_merge_max_utilization(l, kappa); });
}

pq_status pq_split_merge_max_utilization_erlang(int l, int shape, double* out) {
    return eval_to(out,
                   [&] { return parq::snc::split_merge_max_utilization_erlang(l, shape); });
}

pq_status pq_erlang_cdf(int shape, double rate, double x, double* out) {
    return eval_to(out, [&] { return parq::snc::erlang_cdf(shape, rate, x); });
}

pq_status pq_erlang_max_mean(int l, int shape, double rate, double* out) {
    return eval_to(out, [&] { return parq::snc::erlang_max_mean(l, shape, rate); });
}

pq_status pq_erlang_max_mgf(int l, int shape, double rate, double theta, double* out) {
    return eval_to(out, [&] { return parq::snc::erlang_max_mgf(l, shape, rate, theta); });
}

/* --- bounds ---------------------------------------------------------------- */

namespace {

parq::snc::BoundResult bound_dispatch(pq_bound_model model, pq_metric metric, int l,
                                      int k, double lambda_s, double mu_s,
                                      double epsilon, const pq_overhead* overhead,
                                      int task_index, int erlang_shape) {
    using namespace parq::snc;
    Metric m = metric == PQ_METRIC_WAITING ? Metric::Waiting : Metric::Sojourn;
    // work in seconds, report ms at the boundary
    OverheadTerms terms = terms_ms(overhead);
    terms.task_mean /= 1000.0;
    terms.pre_job /= 1000.0;
    terms.pre_task /= 1000.0;
    switch (model) {
        case PQ_BOUND_MM1:
            return single_server_bound(service_exp_envelope(mu_s),
                                       arrival_exp_envelope(lambda_s), epsilon, m);
        case PQ_BOUND_SPLIT_MERGE:
            return split_merge_overhead_approx(l, k, lambda_s, mu_s, terms, epsilon, m);
        case PQ_BOUND_SQ_FORK_JOIN:
            return sq_fork_join_overhead_approx(l, k, lambda_s, mu_s, terms, epsilon, m,
                                                task_index);
        case PQ_BOUND_FORK_JOIN_CONV:
            if (k != 0 && k != l)
                throw std::invalid_argument("k: conventional fork-join requires k = l");
            return fork_join_conventional_bound(l, lambda_s, mu_s, epsilon, m);
        case PQ_BOUND_IDEAL_PARTITION:
            return ideal_partition_bound(l, k, lambda_s, mu_s, epsilon, m);
        case PQ_BOUND_SPLIT_MERGE_ERLANG: {
            if (erlang_shape < 1)
                throw std::invalid_argument("shape: Erlang task shape must be >= 1");
            Envelope service = erlang_split_merge_envelope(l, erlang_shape, mu_s);
            return single_server_bound(service, arrival_exp_envelope(lambda_s), epsilon,
                                       m);
        }
    }
    throw std::invalid_argument("bound: unknown model");
}

}  // namespace

pq_status pq_bound(pq_bound_model model, pq_metric metric, int l, int k,
                   double lambda_per_s, double mu_per_s, double epsilon,
                   const pq_overhead* overhead, int task_index, int erlang_shape,
                   pq_bound_result* out) {
    if (!out) return fail(PQ_ERR_INVALID, "null output pointer");
    return guarded([&] {
        parq::snc::BoundResult r = bound_dispatch(model, metric, l, k, lambda_per_s,
                                                  mu_per_s, epsilon, overhead,
                                                  task_index, erlang_shape);
        out->feasible = r.feasible ? 1 : 0;
        out->theta_star = r.feasible ? r.theta_star : 0.0;
        out->tau_ms = r.feasible ? r.tau * 1000.0 : 0.0;
        return PQ_OK;
    });
}

pq_status pq_bound_sweep_csv(pq_bound_model model, pq_metric metric, int l,
                             const int* k_values, size_t nk, double lambda_per_s,
                             double mu_per_s, double workload_ms, const double* epsilons,
                             size_t neps, const pq_overhead* overhead,
                             const char* csv_path) {
    if (!k_values || !epsilons) return fail(PQ_ERR_INVALID, "null array pointer");
    return guarded([&] {
        std::ofstream csv(csv_path ? csv_path : "");
        if (!csv) throw std::runtime_error(std::string("cannot open ") +
                                           (csv_path ? csv_path : "(null)"));
        csv << "k,epsilon,theta_star,tau_ms,feasible\n";
        char buf[160];
        for (size_t i = 0; i < nk; ++i) {
            int k = k_values[i];
            double mu = mu_per_s > 0 ? mu_per_s
                                     : 1000.0 * k / (l * workload_ms);
            for (size_t e = 0; e < neps; ++e) {
                parq::snc::BoundResult r =
                    bound_dispatch(model, metric, l, k, lambda_per_s, mu, epsilons[e],
                                   overhead, 0, 0);
                if (r.feasible)
                    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,1\n", k,
                                  epsilons[e], r.theta_star, r.tau * 1000.0);
                else
                    std::snprintf(buf, sizeof(buf), "%d,%.12g,,,0\n", k, epsilons[e]);
                csv << buf;
            }
        }
        return PQ_OK;
    });
}

/* --- experiment drivers ----------------------------------------------------- */

pq_status pq_run_sweep_csv(const pq_config* base, const char* vary, const double* values,
                           size_t nvalues, const double* epsilons, size_t neps,
                           int compare_analytical, double workload_ms, int mu_pinned,
                           int threads, const char* csv_path) {
    PQ_REQUIRE_CFG(base);
    if (!values) return fail(PQ_ERR_INVALID, "null array pointer");
    return guarded([&] {
        parq::experiments::SweepSpec spec;
        spec.base = base->cfg;
        spec.vary = vary ? vary : "k";
        spec.values.assign(values, values + nvalues);
        if (epsilons) spec.epsilons.assign(epsilons, epsilons + neps);
        spec.compare_analytical = compare_analytical != 0;
        if (workload_ms > 0) spec.workload_ms = workload_ms;
        spec.mu_pinned = mu_pinned != 0;
        spec.threads = threads;
        auto rows = parq::experiments::run_sweep(spec);
        parq::experiments::write_sweep_csv(rows, spec.vary, spec.epsilons,
                                           csv_path ? csv_path : "");
        return PQ_OK;
    });
}

pq_status pq_stability_curve_csv(const pq_config* base, const int* k_values, size_t nk,
                                 int threads, const char* csv_path) {
    PQ_REQUIRE_CFG(base);
    if (!k_values) return fail(PQ_ERR_INVALID, "null array pointer");
    return guarded([&] {
        std::vector<int> ks(k_values, k_values + nk);
        auto points = parq::experiments::stability_curve(base->cfg, ks, threads);
        parq::experiments::write_stability_csv(points, csv_path ? csv_path : "");
        return PQ_OK;
    });
}

pq_status pq_stability_analytic_csv(const int* l_values, size_t nl, double kappa,
                                    const char* csv_path) {
    if (!l_values) return fail(PQ_ERR_INVALID, "null array pointer");
    return guarded([&] {
        std::vector<int> ls(l_values, l_values + nl);
        parq::experiments::write_stability_analytic_csv(ls, kappa,
                                                        csv_path ? csv_path : "");
        return PQ_OK;
    });
}

pq_status pq_fit_overhead(const char* const* tasks_csvs, size_t n_tasks_csvs,
                          const char* const* jobs_csvs, size_t n_jobs_csvs,
                          pq_overhead_fit* out, const char* report_json_path) {
    if (!out || !tasks_csvs || !jobs_csvs)
        return fail(PQ_ERR_INVALID, "null pointer argument");
    return guarded([&] {
        if (n_jobs_csvs == 0) throw std::invalid_argument("fit: no jobs files");
        if (n_tasks_csvs == 0) throw std::invalid_argument("fit: no tasks files");
        // Merge several runs; job indices are offset per file pair so runs
        // with overlapping numbering stay distinct.
        std::vector<parq::sim::TaskRecord> tasks;
        std::vector<parq::sim::JobRecord> jobs;
        size_t n_files = std::max(n_tasks_csvs, n_jobs_csvs);
        long offset = 0;
        for (size_t i = 0; i < n_files; ++i) {
            const char* jobs_path = jobs_csvs[std::min(i, n_jobs_csvs - 1)];
            const char* tasks_path = tasks_csvs[std::min(i, n_tasks_csvs - 1)];
            auto ds = parq::experiments::ingest_trace(jobs_path, tasks_path);
            long max_index = 0;
            for (auto j : ds.jobs) {
                max_index = std::max(max_index, j.index);
                j.index += offset;
                jobs.push_back(j);
            }
            for (auto t : ds.tasks) {
                t.job += offset;
                tasks.push_back(t);
            }
            offset += max_index;
        }
        auto fit = parq::experiments::fit_overhead(tasks, jobs);
        out->c_ts_task_ms = fit.c_ts_task_ms;
        out->mu_ts_task_per_s = fit.mu_ts_task_per_s;
        out->c_pd_job_ms = fit.c_pd_job_ms;
        out->c_pd_task_ms = fit.c_pd_task_ms;
        out->slope_undetermined = fit.slope_undetermined ? 1 : 0;
        if (report_json_path) {
            std::ofstream js(report_json_path);
            if (!js) throw std::runtime_error(std::string("cannot open ") +
                                              report_json_path);
            char buf[640];
            std::snprintf(buf, sizeof(buf),
                          "{\n"
                          "  \"c_ts_task_ms\": %.12g,\n"
                          "  \"mu_ts_task_per_s\": %.12g,\n"
                          "  \"c_pd_job_ms\": %.12g,\n"
                          "  \"c_pd_task_ms\": %.12g,\n"
                          "  \"slope_undetermined\": %s,\n"
                          "  \"residuals\": {\"min\": %.12g, \"q25\": %.12g, "
                          "\"median\": %.12g, \"q75\": %.12g, \"max\": %.12g, "
                          "\"mean\": %.12g}\n"
                          "}\n",
                          fit.c_ts_task_ms, fit.mu_ts_task_per_s, fit.c_pd_job_ms,
                          fit.c_pd_task_ms, fit.slope_undetermined ? "true" : "false",
                          fit.residual_stats.min, fit.residual_stats.q25,
                          fit.residual_stats.median, fit.residual_stats.q75,
                          fit.residual_stats.max, fit.residual_stats.mean);
            js << buf;
        }
        return PQ_OK;
    });
}

pq_status pq_trace_validate(const char* jobs_csv, const char* tasks_csv,
                            const char* report_json_path, long* out_jobs,
                            long* out_tasks, long* out_rejected) {
    if (!jobs_csv) return fail(PQ_ERR_INVALID, "null jobs path");
    return guarded([&] {
        auto ds = parq::experiments::ingest_trace(jobs_csv, tasks_csv ? tasks_csv : "");
        if (out_jobs) *out_jobs = static_cast<long>(ds.jobs.size());
        if (out_tasks) *out_tasks = static_cast<long>(ds.tasks.size());
        if (out_rejected) *out_rejected = static_cast<long>(ds.rejected.size());
        if (report_json_path) {
            std::ofstream js(report_json_path);
            if (!js) throw std::runtime_error(std::string("cannot open ") +
                                              report_json_path);
            js << "{\n  \"jobs\": " << ds.jobs.size()
               << ",\n  \"tasks\": " << ds.tasks.size() << ",\n  \"rejected\": [";
            for (size_t i = 0; i < ds.rejected.size(); ++i) {
                if (i) js << ", ";
                js << "\"" << ds.rejected[i] << "\"";
            }
            js << "]\n}\n";
        }
        return PQ_OK;
    });
}

pq_status pq_compare(const char* jobs_csv_a, const char* jobs_csv_b, int grid_size,
                     const char* pp_csv_path, const char* deltas_json_path) {
    if (!jobs_csv_a || !jobs_csv_b) return fail(PQ_ERR_INVALID, "null jobs path");
    return guarded([&] {
        auto da = parq::experiments::ingest_trace(jobs_csv_a);
        auto db = parq::experiments::ingest_trace(jobs_csv_b);
        EmpiricalSample sa, sb;
        for (const auto& j : da.jobs) sa.add(j.sojourn_ms);
        for (const auto& j : db.jobs) sb.add(j.sojourn_ms);
        sa.finalize();
        sb.finalize();
        auto report = parq::experiments::compare_sojourns(
            sa, sb, grid_size > 1 ? grid_size : 512);
        if (pp_csv_path) {
            std::ofstream csv(pp_csv_path);
            if (!csv) throw std::runtime_error(std::string("cannot open ") + pp_csv_path);
            csv << "f_a,f_b\n";
            char buf[64];
            for (const auto& [fa, fb] : report.pp) {
                std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", fa, fb);
                csv << buf;
            }
        }
        if (deltas_json_path) {
            std::ofstream js(deltas_json_path);
            if (!js) throw std::runtime_error(std::string("cannot open ") +
                                              deltas_json_path);
            js << "{\n  \"quantiles\": [\n";
            for (size_t i = 0; i < report.deltas.size(); ++i) {
                const auto& d = report.deltas[i];
                char buf[200];
                std::snprintf(buf, sizeof(buf),
                              "    {\"q\": %.4g, \"a_ms\": %.12g, \"b_ms\": %.12g, "
                              "\"delta_ms\": %.12g}%s\n",
                              d.q, d.a_ms, d.b_ms, d.b_ms - d.a_ms,
                              i + 1 < report.deltas.size() ? "," : "");
                js << buf;
            }
            js << "  ]\n}\n";
        }
        return PQ_OK;
    });
}

}  // extern "C"
