#include "parq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace parq::experiments {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void run_indexed(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace

std::optional<snc::BoundResult> analytic_bound_for(const sim::SystemConfig& cfg,
                                                   double epsilon, snc::Metric metric) {
    if (cfg.arrival.kind() != DistKind::Exponential ||
        cfg.task_execution.kind() != DistKind::Exponential)
        return std::nullopt;
    // Work in ms: lambda, mu in 1/ms give tau in ms.
    double lambda = cfg.arrival.rate_per_s() / 1000.0;
    double mu = cfg.task_execution.rate_per_s() / 1000.0;
    snc::OverheadTerms terms;
    terms.task_mean = cfg.overhead.task_mean_ms();
    terms.pre_job = cfg.overhead.c_pd_job_ms;
    terms.pre_task = cfg.overhead.c_pd_task_ms;
    switch (cfg.model) {
        case sim::Model::SplitMerge:
            return snc::split_merge_overhead_approx(cfg.workers, cfg.tasks_per_job,
                                                    lambda, mu, terms, epsilon, metric);
        case sim::Model::SingleQueueForkJoin:
            return snc::sq_fork_join_overhead_approx(cfg.workers, cfg.tasks_per_job,
                                                     lambda, mu, terms, epsilon, metric);
        case sim::Model::ForkJoin:
            if (cfg.overhead.any()) return std::nullopt;  // no analytical model
            return snc::fork_join_conventional_bound(cfg.workers, lambda, mu, epsilon,
                                                     metric);
    }
    return std::nullopt;
}

namespace {

sim::SystemConfig config_for_value(const SweepSpec& spec, double value) {
    sim::SystemConfig cfg = spec.base;
    if (spec.vary == "k") {
        cfg.tasks_per_job = static_cast<int>(value);
    } else if (spec.vary == "l") {
        cfg.workers = static_cast<int>(value);
        if (cfg.model == sim::Model::ForkJoin) cfg.tasks_per_job = cfg.workers;
    } else if (spec.vary == "lambda") {
        cfg.arrival = Distribution::exponential(value);
    } else {
        throw std::invalid_argument("sweep: vary must be k, lambda or l");
    }
    if (!spec.mu_pinned && spec.vary != "lambda") {
        // constant expected per-worker workload
        double mu_per_ms = cfg.tasks_per_job / (cfg.workers * spec.workload_ms);
        cfg.task_execution = Distribution::exponential(mu_per_ms * 1000.0);
    }
    return cfg;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    if (spec.values.empty()) throw std::invalid_argument("sweep: no values to vary");
    std::vector<SweepRow> rows(spec.values.size());
    run_indexed(spec.values.size(), spec.threads, [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.value = spec.values[i];
        try {
            row.config = config_for_value(spec, spec.values[i]);
            sim::SimResult result = sim::run(row.config);
            row.summary = result.summary();
            if (spec.compare_analytical) {
                for (double eps : spec.epsilons) {
                    AnalyticPoint p;
                    p.epsilon = eps;
                    auto b = analytic_bound_for(row.config, eps, snc::Metric::Sojourn);
                    if (b) p.bound = *b;
                    row.analytic.push_back(p);
                }
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    });
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& vary,
                     const std::vector<double>& epsilons, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << vary << ",l,k,lambda_per_s,mu_per_s,q50_ms,q90_ms,q99_ms,mean_sojourn_ms,"
           "mean_waiting_ms,sim_stable";
    for (double eps : epsilons)
        out << ",tau_" << format_num(eps) << "_ms,feasible_" << format_num(eps);
    out << ",status\n";
    for (const SweepRow& r : rows) {
        out << format_num(r.value);
        if (!r.ok) {
            out << ",,,,,,,,,,";
            for (std::size_t i = 0; i < epsilons.size(); ++i) out << ",,";
            out << ",failed: " << r.error << "\n";
            continue;
        }
        out << "," << r.config.workers << "," << r.config.tasks_per_job << ","
            << format_num(r.config.arrival.rate_per_s()) << ","
            << format_num(r.config.task_execution.rate_per_s()) << ","
            << format_num(r.summary.q50) << "," << format_num(r.summary.q90) << ","
            << format_num(r.summary.q99) << "," << format_num(r.summary.mean_sojourn)
            << "," << format_num(r.summary.mean_waiting) << ","
            << (r.summary.stable ? 1 : 0);
        for (const AnalyticPoint& p : r.analytic) {
            if (p.bound.feasible)
                out << "," << format_num(p.bound.tau) << ",1";
            else
                out << ",,0";
        }
        out << ",ok\n";
    }
}

// --- trace ingestion -------------------------------------------------------

namespace {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(cell.empty() ? kNaN : std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": not a number: '" + cell + "'");
            }
        }
        if (row.size() != table.header.size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": wrong field count");
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<std::size_t> column_indices(const CsvTable& table,
                                        const std::vector<std::string>& wanted,
                                        const std::string& path) {
    std::vector<std::size_t> idx;
    std::vector<std::string> missing;
    for (const std::string& name : wanted) {
        auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end())
            missing.push_back(name);
        else
            idx.push_back(static_cast<std::size_t>(it - table.header.begin()));
    }
    if (!missing.empty()) {
        std::string msg = path + ": missing column(s):";
        for (const std::string& m : missing) msg += " " + m;
        throw std::runtime_error(msg);
    }
    return idx;
}

}  // namespace

TraceDataset ingest_trace(const std::string& jobs_csv, const std::string& tasks_csv) {
    TraceDataset ds;
    ds.source_label = jobs_csv;

    CsvTable jobs = read_csv(jobs_csv);
    auto jc = column_indices(jobs,
                             {"job", "arrival_ms", "first_start_ms", "last_finish_ms",
                              "departure_ms", "sojourn_ms", "waiting_ms", "workload_ms",
                              "service_ms"},
                             jobs_csv);
    std::map<long, bool> seen_jobs;
    for (std::size_t i = 0; i < jobs.rows.size(); ++i) {
        const auto& r = jobs.rows[i];
        sim::JobRecord j;
        j.index = static_cast<long>(r[jc[0]]);
        j.arrival_ms = r[jc[1]];
        j.first_start_ms = r[jc[2]];
        j.last_finish_ms = r[jc[3]];
        j.departure_ms = r[jc[4]];
        j.sojourn_ms = r[jc[5]];
        j.waiting_ms = r[jc[6]];
        j.workload_ms = r[jc[7]];
        j.service_ms = r[jc[8]];
        if (j.departure_ms < j.last_finish_ms || j.last_finish_ms < j.first_start_ms ||
            j.first_start_ms < j.arrival_ms) {
            ds.rejected.push_back("jobs row " + std::to_string(i + 2) +
                                  ": inconsistent timestamps (job " +
                                  std::to_string(j.index) + ")");
            continue;
        }
        ds.jobs.push_back(j);
        seen_jobs[j.index] = true;
    }

    if (!tasks_csv.empty()) {
        CsvTable tasks = read_csv(tasks_csv);
        auto tc = column_indices(tasks,
                                 {"job", "task", "start_ms", "exec_ms", "overhead_ms",
                                  "service_ms", "finish_ms"},
                                 tasks_csv);
        for (std::size_t i = 0; i < tasks.rows.size(); ++i) {
            const auto& r = tasks.rows[i];
            sim::TaskRecord t;
            t.job = static_cast<long>(r[tc[0]]);
            t.task = static_cast<int>(r[tc[1]]);
            t.start_ms = r[tc[2]];
            t.exec_ms = r[tc[3]];
            t.overhead_ms = r[tc[4]];
            t.service_ms = r[tc[5]];
            t.finish_ms = r[tc[6]];
            if (t.finish_ms < t.start_ms) {
                ds.rejected.push_back("tasks row " + std::to_string(i + 2) +
                                      ": finish before start (job " +
                                      std::to_string(t.job) + ", task " +
                                      std::to_string(t.task) + ")");
                continue;
            }
            if (!seen_jobs.count(t.job)) {
                ds.rejected.push_back("tasks row " + std::to_string(i + 2) +
                                      ": unknown job " + std::to_string(t.job));
                continue;
            }
            ds.tasks.push_back(t);
        }
    }
    return ds;
}

OverheadFit fit_overhead(const std::vector<sim::TaskRecord>& tasks,
                         const std::vector<sim::JobRecord>& jobs) {
    if (tasks.empty()) throw std::invalid_argument("fit_overhead: no task records");
    OverheadFit fit;

    EmpiricalSample overheads;
    for (const auto& t : tasks) overheads.add(t.service_ms - t.exec_ms);
    overheads.finalize();
    // 1st percentile rather than the minimum; robust to under-measured rows.
    fit.c_ts_task_ms = overheads.quantile(0.01);

    EmpiricalSample residuals;
    double residual_sum = 0.0;
    for (double o : overheads.values()) {
        double r = o - fit.c_ts_task_ms;
        residuals.add(r);
        residual_sum += r;
    }
    residuals.finalize();
    double residual_mean = residual_sum / static_cast<double>(overheads.count());
    fit.mu_ts_task_per_s = residual_mean > 1e-12 ? 1000.0 / residual_mean : 0.0;
    fit.residual_stats = boxplot_summary(residuals);

    // Pre-departure delay vs. tasks-per-job, least squares.
    std::map<long, int> task_count;
    for (const auto& t : tasks) ++task_count[t.job];
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    bool multiple_k = false;
    int first_k = -1;
    for (const auto& j : jobs) {
        auto it = task_count.find(j.index);
        if (it == task_count.end()) continue;
        double k = it->second;
        if (first_k < 0)
            first_k = it->second;
        else if (it->second != first_k)
            multiple_k = true;
        double d = j.departure_ms - j.last_finish_ms;
        sx += k;
        sy += d;
        sxx += k * k;
        sxy += k * d;
        ++n;
    }
    if (n == 0) {
        fit.slope_undetermined = true;
        return fit;
    }
    if (multiple_k) {
        double denom = n * sxx - sx * sx;
        fit.c_pd_task_ms = (n * sxy - sx * sy) / denom;
        fit.c_pd_job_ms = (sy - fit.c_pd_task_ms * sx) / n;
    } else {
        fit.slope_undetermined = true;
        fit.c_pd_task_ms = 0.0;
        fit.c_pd_job_ms = sy / n;
    }
    // Clamp tiny negative values from noise.
    if (fit.c_pd_task_ms < 0 && fit.c_pd_task_ms > -1e-9) fit.c_pd_task_ms = 0.0;
    if (fit.c_pd_job_ms < 0 && fit.c_pd_job_ms > -1e-9) fit.c_pd_job_ms = 0.0;
    return fit;
}

CompareReport compare_sojourns(const EmpiricalSample& a, const EmpiricalSample& b,
                               int grid_size) {
    CompareReport report;
    report.pp = pp_plot(a, b, grid_size);
    for (double q : {0.5, 0.9, 0.99})
        report.deltas.push_back({q, a.quantile(q), b.quantile(q)});
    return report;
}

std::vector<StabilityPoint> stability_curve(const sim::SystemConfig& base,
                                            const std::vector<int>& k_values,
                                            int threads) {
    if (k_values.empty()) throw std::invalid_argument("stability_curve: no k values");
    std::vector<StabilityPoint> points(k_values.size());
    run_indexed(k_values.size(), threads, [&](std::size_t i) {
        StabilityPoint& p = points[i];
        p.k = k_values[i];
        p.kappa = static_cast<double>(p.k) / base.workers;
        p.tiny_max = kNaN;
        p.big_max = kNaN;
        try {
            sim::SystemConfig cfg = base;
            cfg.tasks_per_job = p.k;
            // keep the expected job workload constant across k
            double workload_ms = base.tasks_per_job * base.task_execution.mean_ms();
            cfg.task_execution =
                Distribution::exponential(1000.0 * p.k / workload_ms);
            p.sim_max = sim::max_stable_utilization(cfg);
            if (cfg.model == sim::Model::SplitMerge && p.kappa >= 1.0) {
                p.tiny_max = snc::split_merge_max_utilization(cfg.workers, p.kappa);
                if (p.kappa == std::floor(p.kappa))
                    p.big_max = snc::split_merge_max_utilization_erlang(
                        cfg.workers, static_cast<int>(p.kappa));
            }
            p.ok = true;
        } catch (const std::exception& e) {
            p.ok = false;
            p.error = e.what();
        }
    });
    return points;
}

void write_stability_csv(const std::vector<StabilityPoint>& points,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "k,kappa,rho_max_sim,rho_max_tiny,rho_max_big,status\n";
    for (const auto& p : points) {
        if (!p.ok) {
            out << p.k << "," << format_num(p.kappa) << ",,,,failed: " << p.error
                << "\n";
            continue;
        }
        out << p.k << "," << format_num(p.kappa) << "," << format_num(p.sim_max) << ","
            << format_num(p.tiny_max) << "," << format_num(p.big_max) << ",ok\n";
    }
}

void write_stability_analytic_csv(const std::vector<int>& l_values, double kappa,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "l,kappa,rho_max_tiny,rho_max_big\n";
    for (int l : l_values) {
        double tiny = snc::split_merge_max_utilization(l, kappa);
        double big = kNaN;
        if (kappa == std::floor(kappa) && kappa >= 1.0)
            big = snc::split_merge_max_utilization_erlang(l, static_cast<int>(kappa));
        out << l << "," << format_num(kappa) << "," << format_num(tiny) << ","
            << format_num(big) << "\n";
    }
}

}  // namespace parq::experiments
