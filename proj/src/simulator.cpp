#include "parq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace parq::sim {

namespace {

// Draw kinds; each (kind, job, task) triple owns an independent stream so
// draws are identical across models and scheduling orders.
constexpr std::uint64_t kArrivalDraw = 1;
constexpr std::uint64_t kTaskDraw = 2;

// Array-backed min-heap of worker-free times with a replace-top primitive.
class WorkerHeap {
public:
    void assign(int n, double t) {
        slots_.assign(static_cast<std::size_t>(n), t);
    }
    double top() const { return slots_[0]; }
    // Pops the earliest free time and pushes the new finish time.
    void replace_top(double finish) {
        std::size_t i = 0;
        const std::size_t n = slots_.size();
        while (true) {
            std::size_t left = 2 * i + 1;
            if (left >= n) break;
            std::size_t child = left;
            std::size_t right = left + 1;
            if (right < n && slots_[right] < slots_[left]) child = right;
            if (slots_[child] >= finish) break;
            slots_[i] = slots_[child];
            i = child;
        }
        slots_[i] = finish;
    }

private:
    std::vector<double> slots_;
};

}  // namespace

const char* model_name(Model m) {
    switch (m) {
        case Model::SplitMerge: return "sm";
        case Model::SingleQueueForkJoin: return "sqfj";
        case Model::ForkJoin: return "fj";
    }
    return "?";
}

Model parse_model(const std::string& name) {
    if (name == "sm") return Model::SplitMerge;
    if (name == "sqfj") return Model::SingleQueueForkJoin;
    if (name == "fj") return Model::ForkJoin;
    throw std::invalid_argument("model: expected sm, sqfj or fj, got '" + name + "'");
}

void OverheadParams::validate() const {
    if (c_ts_task_ms < 0 || c_pd_job_ms < 0 || c_pd_task_ms < 0 || mu_ts_task_per_s < 0)
        throw std::invalid_argument("overhead: parameters must be >= 0");
}

double SystemConfig::utilization() const {
    double lambda_per_ms = 1.0 / arrival.mean_ms();
    return lambda_per_ms * tinyfication() * task_execution.mean_ms();
}

SystemConfig SystemConfig::with_utilization(double rho) const {
    if (arrival.kind() != DistKind::Exponential)
        throw std::invalid_argument("utilization sweep requires exponential arrivals");
    if (!(rho > 0.0))
        throw std::invalid_argument("utilization must be > 0");
    SystemConfig c = *this;
    double lambda_per_ms = rho / (tinyfication() * task_execution.mean_ms());
    c.arrival = Distribution::exponential(lambda_per_ms * 1000.0);
    return c;
}

void SystemConfig::validate() const {
    if (workers < 1) throw std::invalid_argument("l: worker count must be >= 1");
    if (tasks_per_job < 1) throw std::invalid_argument("k: tasks per job must be >= 1");
    if (model == Model::ForkJoin && tasks_per_job != workers)
        throw std::invalid_argument("k: conventional fork-join requires k = l (got k=" +
                                    std::to_string(tasks_per_job) + ", l=" +
                                    std::to_string(workers) + ")");
    if (model != Model::ForkJoin && tasks_per_job < workers)
        throw std::invalid_argument("k: k must be >= l (got k=" +
                                    std::to_string(tasks_per_job) + ", l=" +
                                    std::to_string(workers) + ")");
    if (n_jobs < 1) throw std::invalid_argument("jobs: must simulate >= 1 job");
    if (warmup_jobs < 0) throw std::invalid_argument("warmup: must be >= 0");
    overhead.validate();
}

std::string SystemConfig::canonical() const {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "model=%s;l=%d;k=%d;arrival=%s;exec=%s;ovh=%.12g,%.12g,%.12g,%.12g;"
                  "jobs=%ld;seed=%llu;inseq=%d;warmup=%ld",
                  model_name(model), workers, tasks_per_job,
                  arrival.to_string().c_str(), task_execution.to_string().c_str(),
                  overhead.c_ts_task_ms, overhead.mu_ts_task_per_s,
                  overhead.c_pd_job_ms, overhead.c_pd_task_ms, n_jobs,
                  static_cast<unsigned long long>(seed),
                  in_sequence_departures ? 1 : 0, warmup_jobs);
    return buf;
}

std::string SystemConfig::digest() const {
    std::string text = canonical();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

struct TaskDraw {
    double exec_ms;
    double overhead_ms;
};

// One stream per (job, task): the execution draw comes first so it is
// identical whether or not overhead is enabled (common random numbers
// across configurations and models). Rates are pre-inverted; the two
// log1p calls per task dominate what is left.
class DrawSource {
public:
    explicit DrawSource(const SystemConfig& cfg)
        : cfg_(cfg),
          exec_kind_(cfg.task_execution.kind()),
          exec_shape_(cfg.task_execution.shape()),
          exec_value_ms_(cfg.task_execution.value_ms()),
          exec_shift_ms_(cfg.task_execution.shift_ms()),
          ovh_const_ms_(cfg.overhead.c_ts_task_ms) {
        if (exec_kind_ != DistKind::Deterministic)
            exec_scale_ms_ = 1000.0 / cfg.task_execution.rate_per_s();
        if (cfg.overhead.mu_ts_task_per_s > 0.0)
            ovh_scale_ms_ = 1000.0 / cfg.overhead.mu_ts_task_per_s;
    }

    double inter_arrival(long job) const {
        RngStream rng(cfg_.seed, stream_id(kArrivalDraw, static_cast<std::uint64_t>(job), 0));
        return cfg_.arrival.sample_ms(rng);
    }

    TaskDraw task(long job, int task) const {
        RngStream rng(cfg_.seed,
                      stream_id(kTaskDraw, static_cast<std::uint64_t>(job),
                                static_cast<std::uint64_t>(task)));
        TaskDraw d{0.0, ovh_const_ms_};
        switch (exec_kind_) {
            case DistKind::Exponential:
                d.exec_ms = exp_draw(rng);
                break;
            case DistKind::Erlang: {
                double sum = 0.0;
                for (int i = 0; i < exec_shape_; ++i) sum += exp_draw(rng);
                d.exec_ms = sum;
                break;
            }
            case DistKind::Deterministic:
                d.exec_ms = exec_value_ms_;
                break;
            case DistKind::ShiftedExponential:
                d.exec_ms = exec_shift_ms_ + exp_draw(rng);
                break;
        }
        if (ovh_scale_ms_ > 0.0)
            d.overhead_ms += -std::log1p(-rng.next_unit()) * ovh_scale_ms_;
        return d;
    }

private:
    double exp_draw(RngStream& rng) const {
        return -std::log1p(-rng.next_unit()) * exec_scale_ms_;
    }

    const SystemConfig& cfg_;
    DistKind exec_kind_;
    int exec_shape_;
    double exec_value_ms_;
    double exec_shift_ms_;
    double exec_scale_ms_ = 0.0;
    double ovh_scale_ms_ = 0.0;
    double ovh_const_ms_;
};

struct JobTally {
    double first_start = std::numeric_limits<double>::infinity();
    double last_finish = 0, workload = 0;
};

}  // namespace

SimResult run(const SystemConfig& config) {
    config.validate();
    SimResult result;
    result.config = config;

    const long n = config.n_jobs;
    const int l = config.workers;
    const int k = config.tasks_per_job;
    const double pd = config.overhead.pre_departure_ms(k);
    DrawSource draws(config);

    result.jobs.resize(static_cast<std::size_t>(n));
    if (config.record_tasks)
        result.tasks.reserve(static_cast<std::size_t>(n) * k);

    WorkerHeap heap;
    std::vector<double> server_free;  // ForkJoin only
    if (config.model == Model::ForkJoin)
        server_free.assign(static_cast<std::size_t>(l), 0.0);
    else if (config.model == Model::SingleQueueForkJoin)
        heap.assign(l, 0.0);

    double arrival = 0.0;
    double prev_departure = 0.0;   // final departure of job n-1
    double prev_in_order = 0.0;    // pre-overhead departure after reordering

    for (long j = 1; j <= n; ++j) {
        arrival += draws.inter_arrival(j);
        JobTally t;

        auto run_task = [&](int i, double start) {
            TaskDraw d = draws.task(j, i);
            double service = d.exec_ms + d.overhead_ms;
            double finish = start + service;
            t.workload += service;
            if (start < t.first_start) t.first_start = start;
            if (finish > t.last_finish) t.last_finish = finish;
            if (config.record_tasks)
                result.tasks.push_back({j, i, start, d.exec_ms, d.overhead_ms, service, finish});
            return finish;
        };

        double ready;  // pre-overhead completion of the whole job
        switch (config.model) {
            case Model::SplitMerge: {
                // Head-of-line job splits once the previous job departed;
                // all workers are idle at that instant.
                double split = std::max(arrival, prev_departure);
                heap.assign(l, split);
                for (int i = 1; i <= k; ++i)
                    heap.replace_top(run_task(i, heap.top()));
                ready = t.last_finish;
                break;
            }
            case Model::SingleQueueForkJoin: {
                // Global FIFO: task (j, i) starts when released and a
                // worker is free. Start times are nondecreasing in queue
                // order, so greedy earliest-worker assignment is exact.
                for (int i = 1; i <= k; ++i)
                    heap.replace_top(run_task(i, std::max(arrival, heap.top())));
                ready = t.last_finish;
                break;
            }
            case Model::ForkJoin: {
                for (int i = 1; i <= k; ++i) {
                    double start = std::max(arrival, server_free[static_cast<std::size_t>(i - 1)]);
                    server_free[static_cast<std::size_t>(i - 1)] = run_task(i, start);
                }
                ready = t.last_finish;
                break;
            }
            default:
                throw std::logic_error("unreachable");
        }

        double departure;
        if (config.model == Model::SplitMerge) {
            // Pre-departure overhead blocks the next job from splitting.
            departure = ready + pd;
        } else {
            if (config.in_sequence_departures) ready = std::max(ready, prev_in_order);
            prev_in_order = ready;
            departure = ready + pd;  // asynchronous; workers already moved on
        }

        JobRecord& rec = result.jobs[static_cast<std::size_t>(j - 1)];
        rec.index = j;
        rec.arrival_ms = arrival;
        rec.first_start_ms = t.first_start;
        rec.last_finish_ms = t.last_finish;
        rec.departure_ms = departure;
        rec.sojourn_ms = departure - arrival;
        rec.waiting_ms = std::max(prev_departure - arrival, 0.0);
        rec.workload_ms = t.workload;
        rec.service_ms = t.last_finish - t.first_start;
        prev_departure = departure;
    }

    double last_arrival = result.jobs.back().arrival_ms;
    long backlog = 0;
    for (const JobRecord& r : result.jobs)
        if (r.departure_ms > last_arrival) ++backlog;
    result.backlog_at_last_arrival = backlog;
    return result;
}

long SimResult::effective_warmup() const {
    long n = static_cast<long>(jobs.size());
    return n > config.warmup_jobs ? config.warmup_jobs : 0;
}

EmpiricalSample SimResult::sojourn_sample() const {
    long skip = effective_warmup();
    std::vector<double> v;
    v.reserve(jobs.size() - static_cast<std::size_t>(skip));
    for (std::size_t i = static_cast<std::size_t>(skip); i < jobs.size(); ++i)
        v.push_back(jobs[i].sojourn_ms);
    return EmpiricalSample(std::move(v));
}

bool SimResult::stable() const {
    const long n = static_cast<long>(jobs.size());
    if (n < 10) return true;
    auto decile_mean_waiting = [&](int d) {
        long lo = (d - 1) * n / 10;  // exclusive
        long hi = d * n / 10;        // inclusive
        double sum = 0.0;
        for (long i = lo; i < hi; ++i) sum += jobs[static_cast<std::size_t>(i)].waiting_ms;
        return sum / static_cast<double>(hi - lo);
    };
    if (backlog_at_last_arrival > 10L * config.workers) return false;
    return decile_mean_waiting(10) <= 2.0 * decile_mean_waiting(4);
}

SimSummary SimResult::summary() const {
    SimSummary s;
    EmpiricalSample sample = sojourn_sample();
    s.q50 = sample.quantile(0.5);
    s.q90 = sample.quantile(0.9);
    s.q99 = sample.quantile(0.99);
    long skip = effective_warmup();
    double sum_sojourn = 0, sum_waiting = 0, sum_service = 0;
    for (std::size_t i = static_cast<std::size_t>(skip); i < jobs.size(); ++i) {
        sum_sojourn += jobs[i].sojourn_ms;
        sum_waiting += jobs[i].waiting_ms;
        sum_service += jobs[i].service_ms;
    }
    double m = static_cast<double>(jobs.size() - static_cast<std::size_t>(skip));
    s.mean_sojourn = sum_sojourn / m;
    s.mean_waiting = sum_waiting / m;
    s.mean_service = sum_service / m;
    s.stable = stable();
    s.warmup_used = skip;
    return s;
}

void SimResult::write_jobs_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "job,arrival_ms,first_start_ms,last_finish_ms,departure_ms,sojourn_ms,"
           "waiting_ms,workload_ms,service_ms\n";
    char buf[256];
    for (const JobRecord& r : jobs) {
        std::snprintf(buf, sizeof(buf),
                      "%ld,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.index,
                      r.arrival_ms, r.first_start_ms, r.last_finish_ms, r.departure_ms,
                      r.sojourn_ms, r.waiting_ms, r.workload_ms, r.service_ms);
        out << buf;
    }
}

void SimResult::write_tasks_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "job,task,start_ms,exec_ms,overhead_ms,service_ms,finish_ms\n";
    char buf[224];
    for (const TaskRecord& r : tasks) {
        std::snprintf(buf, sizeof(buf), "%ld,%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.job,
                      r.task, r.start_ms, r.exec_ms, r.overhead_ms, r.service_ms,
                      r.finish_ms);
        out << buf;
    }
}

void SimResult::write_summary_json(const std::string& path) const {
    SimSummary s = summary();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    char buf[1024];
    std::snprintf(
        buf, sizeof(buf),
        "{\n"
        "  \"config\": {\n"
        "    \"model\": \"%s\",\n"
        "    \"l\": %d,\n"
        "    \"k\": %d,\n"
        "    \"arrival\": \"%s\",\n"
        "    \"task_execution\": \"%s\",\n"
        "    \"overhead\": {\"c_ts_task_ms\": %.12g, \"mu_ts_task_per_s\": %.12g, "
        "\"c_pd_job_ms\": %.12g, \"c_pd_task_ms\": %.12g},\n"
        "    \"jobs\": %ld,\n"
        "    \"seed\": %llu,\n"
        "    \"in_sequence_departures\": %s,\n"
        "    \"warmup_jobs\": %ld\n"
        "  },\n"
        "  \"quantiles\": {\"0.5\": %.12g, \"0.9\": %.12g, \"0.99\": %.12g},\n"
        "  \"mean_sojourn\": %.12g,\n"
        "  \"mean_waiting\": %.12g,\n"
        "  \"stable\": %s\n"
        "}\n",
        model_name(config.model), config.workers, config.tasks_per_job,
        config.arrival.to_string().c_str(), config.task_execution.to_string().c_str(),
        config.overhead.c_ts_task_ms, config.overhead.mu_ts_task_per_s,
        config.overhead.c_pd_job_ms, config.overhead.c_pd_task_ms, config.n_jobs,
        static_cast<unsigned long long>(config.seed),
        config.in_sequence_departures ? "true" : "false", config.warmup_jobs, s.q50,
        s.q90, s.q99, s.mean_sojourn, s.mean_waiting, s.stable ? "true" : "false");
    out << buf;
}

std::vector<std::pair<double, bool>> stability_scan(const SystemConfig& base,
                                                    const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("stability_scan: empty utilization grid");
    std::vector<std::pair<double, bool>> raw;
    raw.reserve(grid.size());
    for (double rho : grid)
        raw.emplace_back(rho, run(base.with_utilization(rho)).stable());

    // Isotonic cleanup: pick the cut minimizing disagreements, preferring
    // the larger stable prefix on ties.
    std::size_t best_cut = 0;
    int best_cost = -1;
    for (std::size_t cut = 0; cut <= raw.size(); ++cut) {
        int cost = 0;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            bool want_stable = i < cut;
            if (raw[i].second != want_stable) ++cost;
        }
        if (best_cost < 0 || cost <= best_cost) {
            best_cost = cost;
            best_cut = cut;
        }
    }
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i].second = i < best_cut;
    return raw;
}

double max_stable_utilization(const SystemConfig& base) {
    double lo = 0.05, hi = 0.99;
    if (run(base.with_utilization(hi)).stable()) return hi;
    if (!run(base.with_utilization(lo)).stable()) return lo;
    for (int it = 0; it < 7; ++it) {
        double mid = 0.5 * (lo + hi);
        if (run(base.with_utilization(mid)).stable())
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace parq::sim
