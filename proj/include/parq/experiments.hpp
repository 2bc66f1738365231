// Orchestration layer: parameter sweeps that pair simulation with the
// analytical bounds, trace ingestion and validation, overhead-model
// fitting, and stability-region curves.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "parq/calculus.hpp"
#include "parq/simulator.hpp"
#include "parq/stochastic.hpp"

namespace parq::experiments {

struct SweepSpec {
    sim::SystemConfig base;
    std::string vary = "k";  // k | lambda | l
    std::vector<double> values;
    std::vector<double> epsilons;
    bool compare_analytical = true;
    // Constant expected per-worker workload: when varying k (or l) the task
    // rate is re-derived as mu = k / (l * workload_ms) unless pinned.
    double workload_ms = 1000.0;
    bool mu_pinned = false;
    int threads = 1;
};

struct AnalyticPoint {
    double epsilon = 0.0;
    snc::BoundResult bound;  // tau in ms
};

struct SweepRow {
    double value = 0.0;
    sim::SystemConfig config;
    sim::SimSummary summary;
    std::vector<AnalyticPoint> analytic;
    bool ok = false;
    std::string error;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& vary,
                     const std::vector<double>& epsilons, const std::string& path);

// Analytical quantile bound (or overhead approximation) matching a
// simulator configuration; nullopt when no analytical model applies.
std::optional<snc::BoundResult> analytic_bound_for(const sim::SystemConfig& cfg,
                                                   double epsilon, snc::Metric metric);

struct TraceDataset {
    std::vector<sim::TaskRecord> tasks;
    std::vector<sim::JobRecord> jobs;
    std::string source_label;
    std::vector<std::string> rejected;  // one reason per rejected row
};

// Reads the simulator's jobs/tasks CSV schemas. Missing columns raise an
// error naming them; rows with inconsistent timestamps are rejected
// individually with a reason.
TraceDataset ingest_trace(const std::string& jobs_csv, const std::string& tasks_csv = "");

struct OverheadFit {
    double c_ts_task_ms = 0.0;
    double mu_ts_task_per_s = 0.0;
    double c_pd_job_ms = 0.0;
    double c_pd_task_ms = 0.0;
    BoxplotSummary residual_stats;
    bool slope_undetermined = false;  // single task count in the data
};

// Recovers the four overhead parameters: the task constant from the 1st
// percentile of task overheads, the exponential rate from the residual
// mean, and the pre-departure line by least squares of departure delay
// against tasks-per-job.
OverheadFit fit_overhead(const std::vector<sim::TaskRecord>& tasks,
                         const std::vector<sim::JobRecord>& jobs);

struct QuantileDelta {
    double q = 0.0;
    double a_ms = 0.0;
    double b_ms = 0.0;
};

struct CompareReport {
    std::vector<std::pair<double, double>> pp;
    std::vector<QuantileDelta> deltas;  // at 0.5, 0.9, 0.99
};

CompareReport compare_sojourns(const EmpiricalSample& a, const EmpiricalSample& b,
                               int grid_size = 512);

struct StabilityPoint {
    int k = 0;
    double kappa = 0.0;
    double sim_max = 0.0;
    double tiny_max = 0.0;  // NaN when not applicable
    double big_max = 0.0;   // NaN unless kappa is a positive integer
    bool ok = false;
    std::string error;
};

// Simulated max stable utilization per k (bisection) next to the
// analytical split-merge values.
std::vector<StabilityPoint> stability_curve(const sim::SystemConfig& base,
                                            const std::vector<int>& k_values,
                                            int threads = 1);
void write_stability_csv(const std::vector<StabilityPoint>& points,
                         const std::string& path);

// Analytical-only stability table over l for a fixed kappa.
void write_stability_analytic_csv(const std::vector<int>& l_values, double kappa,
                                  const std::string& path);

}  // namespace parq::experiments
