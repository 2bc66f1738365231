// Event-driven simulation of three parallel service models:
//
//   SplitMerge          one job in service at a time; its k tasks share a
//                       task queue over l workers; the next job cannot start
//                       before the current one departs.
//   SingleQueueForkJoin all tasks of all jobs in one FIFO queue; a freed
//                       worker takes the global head-of-line task; jobs may
//                       overlap in service.
//   ForkJoin            conventional k = l model; task i of every job is
//                       bound to server i with a per-server FIFO queue.
//
// Each task's service time is execution + scheduling overhead (constant +
// exponential, both occupy the worker). Pre-departure overhead delays the
// job departure; it blocks the next job in SplitMerge and is asynchronous
// in the fork-join models.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parq/stochastic.hpp"

namespace parq::sim {

enum class Model { SplitMerge, SingleQueueForkJoin, ForkJoin };

const char* model_name(Model m);
Model parse_model(const std::string& name);

struct OverheadParams {
    double c_ts_task_ms = 0.0;    // constant task-service overhead
    double mu_ts_task_per_s = 0.0;  // rate of the exponential component; 0 disables it
    double c_pd_job_ms = 0.0;     // per-job pre-departure constant
    double c_pd_task_ms = 0.0;    // per-task pre-departure constant

    // Profile fitted against scheduler measurements; selected by the CLI
    // flag `--overhead paper`.
    static OverheadParams calibrated() { return {2.6, 2000.0, 20.0, 7.4e-3}; }

    bool any() const {
        return c_ts_task_ms != 0.0 || mu_ts_task_per_s != 0.0 ||
               c_pd_job_ms != 0.0 || c_pd_task_ms != 0.0;
    }
    double task_mean_ms() const {
        return c_ts_task_ms + (mu_ts_task_per_s > 0.0 ? 1000.0 / mu_ts_task_per_s : 0.0);
    }
    double pre_departure_ms(int tasks_per_job) const {
        return c_pd_job_ms + tasks_per_job * c_pd_task_ms;
    }
    void validate() const;
};

struct SystemConfig {
    Model model = Model::SplitMerge;
    int workers = 1;        // l
    int tasks_per_job = 1;  // k
    Distribution arrival = Distribution::exponential(1.0);
    Distribution task_execution = Distribution::exponential(1.0);
    OverheadParams overhead;
    long n_jobs = 10000;
    std::uint64_t seed = 1;
    bool in_sequence_departures = false;
    long warmup_jobs = 1000;
    bool record_tasks = false;

    double tinyfication() const {
        return static_cast<double>(tasks_per_job) / workers;
    }
    // Server utilization convention: rho = lambda * kappa * E[execution].
    double utilization() const;
    // Rescales the (exponential) arrival rate to hit the given utilization.
    SystemConfig with_utilization(double rho) const;

    void validate() const;  // throws std::invalid_argument naming the field
    std::string canonical() const;
    std::string digest() const;  // 16 hex chars over canonical()
};

struct TaskRecord {
    long job = 0;
    int task = 0;  // 1-based within the job
    double start_ms = 0, exec_ms = 0, overhead_ms = 0, service_ms = 0, finish_ms = 0;
};

struct JobRecord {
    long index = 0;  // 1-based
    double arrival_ms = 0;
    double first_start_ms = 0;
    double last_finish_ms = 0;
    double departure_ms = 0;
    double sojourn_ms = 0;   // departure - arrival
    double waiting_ms = 0;   // [departure(n-1) - arrival(n)]_+
    double workload_ms = 0;  // sum of task service times
    double service_ms = 0;   // last_finish - first_start
};

struct SimSummary {
    double q50 = 0, q90 = 0, q99 = 0;
    double mean_sojourn = 0, mean_waiting = 0, mean_service = 0;
    bool stable = true;
    long warmup_used = 0;
};

struct SimResult {
    SystemConfig config;
    std::vector<JobRecord> jobs;
    std::vector<TaskRecord> tasks;  // populated only when config.record_tasks
    long backlog_at_last_arrival = 0;

    // Post-warmup sojourn sample. Warmup is dropped only when the run is
    // longer than the configured warmup.
    EmpiricalSample sojourn_sample() const;
    long effective_warmup() const;

    // Trend-based instability detector: mean waiting time over the 10th
    // decile of jobs compared against the 4th, plus a backlog cap of
    // 10 * workers jobs still in the system at the last arrival.
    bool stable() const;
    SimSummary summary() const;

    void write_jobs_csv(const std::string& path) const;
    void write_tasks_csv(const std::string& path) const;
    void write_summary_json(const std::string& path) const;
};

SimResult run(const SystemConfig& config);

// Classifies each utilization grid point stable/unstable, then applies an
// isotonic cleanup so the result is a stable prefix and unstable suffix.
// Probe length is base.n_jobs.
std::vector<std::pair<double, bool>> stability_scan(const SystemConfig& base,
                                                    const std::vector<double>& grid);

// Max stable utilization by bisection (7 steps from [0.05, 0.99], i.e.
// resolution better than 0.01). Endpoints are probed first.
double max_stable_utilization(const SystemConfig& base);

}  // namespace parq::sim
