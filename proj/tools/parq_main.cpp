// parq command-line frontend. Talks to the core exclusively through the C
// API in parq.h; every run writes a manifest describing the resolved
// configuration and the artifacts produced.
//
// Exit codes: 0 success (an infeasible bound is a result, not a failure),
// 1 usage/configuration error, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "parq.h"

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(pq_status s) {
    if (s == PQ_OK) return;
    if (s == PQ_ERR_INVALID || s == PQ_ERR_DOMAIN) throw UsageError(pq_last_error());
    throw RunError(pq_last_error());
}

std::string default_out_dir() {
    const char* env = std::getenv("PARQ_OUT_DIR");
    return env && *env ? env : ".";
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + ": not a number: '" + cell + "'");
        }
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    for (double v : parse_list(text, what)) out.push_back(static_cast<int>(v));
    return out;
}

std::vector<std::string> split_paths(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

struct OverheadSpec {
    bool enabled = false;
    pq_overhead params{0, 0, 0, 0};
};

// "none", "paper" (the built-in measured profile), or four comma-separated
// values c_ts_ms,mu_ts_per_s,c_pd_job_ms,c_pd_task_ms.
OverheadSpec parse_overhead(const std::string& text) {
    OverheadSpec spec;
    if (text.empty() || text == "none") return spec;
    if (text == "paper") {
        spec.enabled = true;
        spec.params = {2.6, 2000.0, 20.0, 7.4e-3};
        return spec;
    }
    auto vals = parse_list(text, "overhead");
    if (vals.size() != 4)
        throw UsageError("overhead: expected 'none', 'paper' or four values "
                         "c_ts_ms,mu_ts_per_s,c_pd_job_ms,c_pd_task_ms");
    spec.enabled = true;
    spec.params = {vals[0], vals[1], vals[2], vals[3]};
    return spec;
}

std::string manifest_digest(const std::string& canonical) {
    char buf[17];
    pq_digest_hex(canonical.c_str(), buf);
    return buf;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& digest, std::uint64_t seed,
                    const std::vector<std::string>& artifacts) {
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw RunError("cannot open " + dir + "/manifest.json");
    out << "{\n"
        << "  \"command\": \"" << command << "\",\n"
        << "  \"config_digest\": \"" << digest << "\",\n"
        << "  \"seed\": " << seed << ",\n"
        << "  \"artifacts\": [";
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
        if (i) out << ", ";
        out << "\"" << artifacts[i] << "\"";
    }
    out << "],\n"
        << "  \"tool_version\": \"" << pq_version() << "\"\n"
        << "}\n";
}

struct ConfigHandle {
    pq_config* ptr = nullptr;
    ConfigHandle() : ptr(pq_config_new()) {
        if (!ptr) throw RunError("out of memory");
    }
    ~ConfigHandle() { pq_config_free(ptr); }
    ConfigHandle(const ConfigHandle&) = delete;
    ConfigHandle& operator=(const ConfigHandle&) = delete;
};

// Shared simulation flags used by simulate/sweep/stability.
struct SimFlags {
    std::string model = "sm";
    int l = 1;
    int k = 1;
    std::string arrival = "exp:1";
    std::string exec = "exp:1";
    std::string overhead = "none";
    long jobs = 10000;
    std::uint64_t seed = 1;
    bool in_sequence = false;
    long warmup = 1000;

    void add_to(CLI::App* cmd, bool with_k = true) {
        cmd->add_option("--model", model, "sm | sqfj | fj");
        cmd->add_option("--l", l, "worker count");
        if (with_k) cmd->add_option("--k", k, "tasks per job");
        cmd->add_option("--arrival", arrival, "inter-arrival distribution");
        cmd->add_option("--exec", exec, "task execution distribution");
        cmd->add_option("--overhead", overhead,
                        "none | paper | c_ts,mu_ts,c_pd_job,c_pd_task");
        cmd->add_option("--jobs", jobs, "jobs to simulate");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_flag("--in-sequence", in_sequence, "jobs depart in sequence");
        cmd->add_option("--warmup", warmup, "jobs excluded from statistics");
    }

    pq_model model_enum() const {
        if (model == "sm") return PQ_MODEL_SPLIT_MERGE;
        if (model == "sqfj") return PQ_MODEL_SINGLE_QUEUE_FORK_JOIN;
        if (model == "fj") return PQ_MODEL_FORK_JOIN;
        throw UsageError("model: expected sm, sqfj or fj, got '" + model + "'");
    }

    // file-name stem encoding the run: <model>_l<L>_k<K>_s<SEED>
    std::string file_stem() const {
        return model + "_l" + std::to_string(l) + "_k" + std::to_string(k) + "_s" +
               std::to_string(seed);
    }

    void apply(pq_config* cfg) const {
        check(pq_config_set_model(cfg, model_enum()));
        check(pq_config_set_workers(cfg, l));
        check(pq_config_set_tasks_per_job(cfg, k));
        check(pq_config_set_arrival(cfg, arrival.c_str()));
        check(pq_config_set_task_execution(cfg, exec.c_str()));
        OverheadSpec ovh = parse_overhead(overhead);
        check(pq_config_set_overhead(cfg, ovh.params.c_ts_task_ms,
                                     ovh.params.mu_ts_task_per_s,
                                     ovh.params.c_pd_job_ms, ovh.params.c_pd_task_ms));
        check(pq_config_set_jobs(cfg, jobs));
        check(pq_config_set_seed(cfg, seed));
        check(pq_config_set_in_sequence(cfg, in_sequence ? 1 : 0));
        check(pq_config_set_warmup(cfg, warmup));
        check(pq_config_validate(cfg));
    }
};

int default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n ? static_cast<int>(n) : 1;
}

// --- subcommand bodies -----------------------------------------------------

int cmd_simulate(const SimFlags& flags, const std::string& out_dir, bool no_tasks) {
    fs::create_directories(out_dir);
    ConfigHandle cfg;
    flags.apply(cfg.ptr);
    check(pq_config_set_record_tasks(cfg.ptr, no_tasks ? 0 : 1));

    pq_result* res = nullptr;
    check(pq_simulate(cfg.ptr, &res));
    std::unique_ptr<pq_result, void (*)(pq_result*)> guard(res, pq_result_free);

    std::vector<std::string> artifacts;
    std::string stem = out_dir + "/" + flags.file_stem();
    std::string jobs_path = stem + ".jobs.csv";
    check(pq_result_write_jobs_csv(res, jobs_path.c_str()));
    artifacts.push_back(jobs_path);
    if (!no_tasks) {
        std::string tasks_path = stem + ".tasks.csv";
        check(pq_result_write_tasks_csv(res, tasks_path.c_str()));
        artifacts.push_back(tasks_path);
    }
    std::string summary_path = stem + ".summary.json";
    check(pq_result_write_summary_json(res, summary_path.c_str()));
    artifacts.push_back(summary_path);

    char digest[17];
    check(pq_config_digest(cfg.ptr, digest));
    write_manifest(out_dir, "simulate", digest, flags.seed, artifacts);

    double mean = 0, q99 = 0;
    check(pq_result_mean_sojourn(res, &mean));
    check(pq_result_sojourn_quantile(res, 0.99, &q99));
    std::printf("simulated %ld jobs: mean sojourn %.6g ms, 0.99 quantile %.6g ms, %s\n",
                pq_result_job_count(res), mean, q99,
                pq_result_stable(res) ? "stable" : "unstable");
    std::printf("wrote %s\n", summary_path.c_str());
    return 0;
}

pq_bound_model bound_model_enum(const std::string& name) {
    if (name == "mm1") return PQ_BOUND_MM1;
    if (name == "sm-tiny") return PQ_BOUND_SPLIT_MERGE;
    if (name == "fj-tiny") return PQ_BOUND_SQ_FORK_JOIN;
    if (name == "fj-conv") return PQ_BOUND_FORK_JOIN_CONV;
    if (name == "ideal") return PQ_BOUND_IDEAL_PARTITION;
    if (name == "sm-erlang") return PQ_BOUND_SPLIT_MERGE_ERLANG;
    throw UsageError("model: expected mm1, sm-tiny, fj-tiny, fj-conv, ideal or "
                     "sm-erlang, got '" + name + "'");
}

int cmd_bound(const std::string& model, const std::string& metric, int l, int k,
              double lambda, double mu, double eps, const std::string& overhead,
              int task_index, int shape, const std::string& k_list,
              const std::string& eps_list, double workload_ms,
              const std::string& out_dir) {
    pq_bound_model bm = bound_model_enum(model);
    pq_metric pm;
    if (metric == "waiting")
        pm = PQ_METRIC_WAITING;
    else if (metric == "sojourn")
        pm = PQ_METRIC_SOJOURN;
    else
        throw UsageError("metric: expected waiting or sojourn, got '" + metric + "'");
    OverheadSpec ovh = parse_overhead(overhead);
    const pq_overhead* povh = ovh.enabled ? &ovh.params : nullptr;

    if (bm == PQ_BOUND_MM1) l = k = 1;
    if (bm == PQ_BOUND_FORK_JOIN_CONV) k = l;

    std::ostringstream canon;
    canon << "bound;model=" << model << ";metric=" << metric << ";l=" << l << ";k=" << k
          << ";lambda=" << lambda << ";mu=" << mu << ";eps=" << eps
          << ";overhead=" << overhead << ";task=" << task_index << ";shape=" << shape;

    if (!k_list.empty()) {
        fs::create_directories(out_dir);
        auto ks = parse_int_list(k_list, "k-list");
        auto epss = eps_list.empty() ? std::vector<double>{eps}
                                     : parse_list(eps_list, "eps-list");
        std::string csv_path = out_dir + "/bounds.csv";
        check(pq_bound_sweep_csv(bm, pm, l, ks.data(), ks.size(), lambda, mu,
                                 workload_ms, epss.data(), epss.size(), povh,
                                 csv_path.c_str()));
        canon << ";k_list=" << k_list << ";eps_list=" << eps_list
              << ";workload=" << workload_ms;
        write_manifest(out_dir, "bound", manifest_digest(canon.str()), 0, {csv_path});
        std::printf("wrote %s\n", csv_path.c_str());
        return 0;
    }

    if (mu <= 0) throw UsageError("mu: must be > 0 (or use --k-list with --workload-ms)");
    pq_bound_result r{};
    check(pq_bound(bm, pm, l, k, lambda, mu, eps, povh, task_index, shape, &r));
    char json[256];
    if (r.feasible)
        std::snprintf(json, sizeof(json),
                      "{\"feasible\": true, \"theta_star\": %.12g, \"tau_ms\": %.12g, "
                      "\"tau_s\": %.12g}\n",
                      r.theta_star, r.tau_ms, r.tau_ms / 1000.0);
    else
        std::snprintf(json, sizeof(json), "{\"feasible\": false}\n");
    std::fputs(json, stdout);

    fs::create_directories(out_dir);
    std::string json_path = out_dir + "/bound.json";
    std::ofstream out(json_path);
    if (!out) throw RunError("cannot open " + json_path);
    out << json;
    out.close();
    write_manifest(out_dir, "bound", manifest_digest(canon.str()), 0, {json_path});
    return 0;
}

int cmd_sweep(const SimFlags& flags, const std::string& vary, const std::string& values,
              const std::string& eps_list, double workload_ms, bool mu_pinned,
              int threads, const std::string& out_dir) {
    fs::create_directories(out_dir);
    ConfigHandle cfg;
    flags.apply(cfg.ptr);
    auto vals = parse_list(values, "values");
    auto epss = parse_list(eps_list, "eps-list");
    std::string csv_path = out_dir + "/" + flags.model + "_l" +
                           std::to_string(flags.l) + "_" + vary + "-sweep_s" +
                           std::to_string(flags.seed) + ".csv";
    check(pq_run_sweep_csv(cfg.ptr, vary.c_str(), vals.data(), vals.size(), epss.data(),
                           epss.size(), 1, workload_ms, mu_pinned ? 1 : 0, threads,
                           csv_path.c_str()));
    char digest[17];
    check(pq_config_digest(cfg.ptr, digest));
    write_manifest(out_dir, "sweep", std::string(digest) + "-" + vary, flags.seed,
                   {csv_path});
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
}

int cmd_stability(const SimFlags& flags, const std::string& k_list,
                  const std::string& l_list, double kappa, bool analytic, int threads,
                  const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::string csv_path;
    if (analytic) {
        if (l_list.empty()) throw UsageError("analytic mode requires --l-list");
        auto ls = parse_int_list(l_list, "l-list");
        csv_path = out_dir + "/stability_kappa" + std::to_string(kappa) + ".csv";
        check(pq_stability_analytic_csv(ls.data(), ls.size(), kappa, csv_path.c_str()));
        write_manifest(out_dir, "stability",
                       manifest_digest("stability;analytic;l=" + l_list +
                                       ";kappa=" + std::to_string(kappa)),
                       0, {csv_path});
    } else {
        if (k_list.empty()) throw UsageError("stability requires --k-list");
        ConfigHandle cfg;
        flags.apply(cfg.ptr);
        auto ks = parse_int_list(k_list, "k-list");
        csv_path = out_dir + "/" + flags.model + "_l" + std::to_string(flags.l) +
                   "_stability_s" + std::to_string(flags.seed) + ".csv";
        check(pq_stability_curve_csv(cfg.ptr, ks.data(), ks.size(), threads,
                                     csv_path.c_str()));
        char digest[17];
        check(pq_config_digest(cfg.ptr, digest));
        write_manifest(out_dir, "stability", digest, flags.seed, {csv_path});
    }
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b, int grid,
                const std::string& out_dir) {
    fs::create_directories(out_dir);
    // a run directory is identified by its single *jobs.csv artifact
    auto resolve = [](const std::string& p) -> std::string {
        if (!fs::is_directory(p)) return p;
        std::string found;
        for (const auto& entry : fs::directory_iterator(p)) {
            std::string name = entry.path().filename().string();
            if (name.size() >= 8 && name.substr(name.size() - 8) == "jobs.csv") {
                if (!found.empty())
                    throw UsageError("compare: multiple job tables in " + p);
                found = entry.path().string();
            }
        }
        if (found.empty()) throw UsageError("compare: no *jobs.csv in " + p);
        return found;
    };
    std::string pp_path = out_dir + "/pp.csv";
    std::string deltas_path = out_dir + "/deltas.json";
    check(pq_compare(resolve(a).c_str(), resolve(b).c_str(), grid, pp_path.c_str(),
                     deltas_path.c_str()));
    write_manifest(out_dir, "compare", manifest_digest("compare;a=" + a + ";b=" + b), 0,
                   {pp_path, deltas_path});
    std::ifstream deltas(deltas_path);
    std::cout << deltas.rdbuf();
    return 0;
}

int cmd_fit_overhead(const std::string& tasks, const std::string& jobs,
                     const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto task_paths = split_paths(tasks);
    auto job_paths = split_paths(jobs);
    std::vector<const char*> tp, jp;
    for (const auto& p : task_paths) tp.push_back(p.c_str());
    for (const auto& p : job_paths) jp.push_back(p.c_str());
    std::string fit_path = out_dir + "/overhead_fit.json";
    pq_overhead_fit fit{};
    check(pq_fit_overhead(tp.data(), tp.size(), jp.data(), jp.size(), &fit,
                          fit_path.c_str()));
    write_manifest(out_dir, "fit-overhead",
                   manifest_digest("fit;tasks=" + tasks + ";jobs=" + jobs), 0,
                   {fit_path});
    std::printf("c_ts_task_ms=%.6g mu_ts_task_per_s=%.6g c_pd_job_ms=%.6g "
                "c_pd_task_ms=%.6g%s\n",
                fit.c_ts_task_ms, fit.mu_ts_task_per_s, fit.c_pd_job_ms,
                fit.c_pd_task_ms,
                fit.slope_undetermined ? " (per-task slope undetermined)" : "");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parallel queueing simulation and performance bounds"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir = default_out_dir();
    app.add_option("--out-dir", out_dir, "output directory (env PARQ_OUT_DIR)")
        ->envname("PARQ_OUT_DIR");
    int threads = default_threads();
    app.add_option("--threads", threads, "worker threads for sweeps");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run one simulation");
    SimFlags sim_flags;
    sim_flags.add_to(simulate);
    bool no_tasks = false;
    simulate->add_flag("--no-tasks", no_tasks, "skip the per-task CSV");

    // bound
    auto* bound = app.add_subcommand("bound", "analytical quantile bound");
    std::string b_model = "mm1", b_metric = "sojourn", b_overhead = "none";
    std::string b_klist, b_epslist;
    int b_l = 1, b_k = 0, b_task_index = 0, b_shape = 1;
    double b_lambda = 0, b_mu = 0, b_eps = 1e-3, b_workload = 1000.0;
    bound->add_option("--model", b_model, "mm1|sm-tiny|fj-tiny|fj-conv|ideal|sm-erlang");
    bound->add_option("--metric", b_metric, "waiting | sojourn");
    bound->add_option("--l", b_l, "worker count");
    bound->add_option("--k", b_k, "tasks per job");
    bound->add_option("--lambda", b_lambda, "arrival rate (1/s)")->required();
    bound->add_option("--mu", b_mu, "task service rate (1/s)");
    bound->add_option("--eps", b_eps, "violation probability");
    bound->add_option("--overhead", b_overhead, "none | paper | four values");
    bound->add_option("--task-index", b_task_index, "task index for waiting (0 = last)");
    bound->add_option("--shape", b_shape, "Erlang shape for sm-erlang");
    bound->add_option("--k-list", b_klist, "sweep k, write bounds.csv");
    bound->add_option("--eps-list", b_epslist, "epsilons for the sweep");
    bound->add_option("--workload-ms", b_workload,
                      "per-worker workload when re-deriving mu in sweeps");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "simulation vs. analytical sweep");
    SimFlags sweep_flags;
    sweep_flags.jobs = 30000;
    sweep_flags.add_to(sweep);
    std::string s_vary = "k", s_values, s_epslist = "0.01";
    double s_workload = 1000.0;
    bool s_mu_pinned = false;
    sweep->add_option("--vary", s_vary, "k | lambda | l");
    sweep->add_option("--values", s_values, "comma-separated values")->required();
    sweep->add_option("--eps-list", s_epslist, "epsilons for analytical columns");
    sweep->add_option("--workload-ms", s_workload, "per-worker workload (constant)");
    sweep->add_flag("--pin-mu", s_mu_pinned, "keep --exec instead of re-deriving");

    // stability
    auto* stability = app.add_subcommand("stability", "max stable utilization curve");
    SimFlags st_flags;
    st_flags.jobs = 50000;
    st_flags.warmup = 0;
    st_flags.add_to(stability);
    std::string st_klist, st_llist;
    double st_kappa = 1.0;
    bool st_analytic = false;
    stability->add_option("--k-list", st_klist, "tasks-per-job values");
    stability->add_option("--l-list", st_llist, "worker counts (analytic mode)");
    stability->add_option("--kappa", st_kappa, "tinyfication for analytic mode");
    stability->add_flag("--analytic", st_analytic, "analytical table only");

    // compare
    auto* compare = app.add_subcommand("compare", "PP plot + quantile deltas");
    std::string c_a, c_b;
    int c_grid = 512;
    compare->add_option("--a", c_a, "jobs.csv or run directory")->required();
    compare->add_option("--b", c_b, "jobs.csv or run directory")->required();
    compare->add_option("--grid", c_grid, "PP grid size");

    // fit-overhead
    auto* fit = app.add_subcommand("fit-overhead", "fit the overhead model");
    std::string f_tasks, f_jobs;
    fit->add_option("--tasks", f_tasks, "tasks.csv (comma-separated list)")->required();
    fit->add_option("--jobs", f_jobs, "jobs.csv (comma-separated list)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim_flags, out_dir, no_tasks);
        if (bound->parsed())
            return cmd_bound(b_model, b_metric, b_l, b_k, b_lambda, b_mu, b_eps,
                             b_overhead, b_task_index, b_shape, b_klist, b_epslist,
                             b_workload, out_dir);
        if (sweep->parsed())
            return cmd_sweep(sweep_flags, s_vary, s_values, s_epslist, s_workload,
                             s_mu_pinned, threads, out_dir);
        if (stability->parsed())
            return cmd_stability(st_flags, st_klist, st_llist, st_kappa, st_analytic,
                                 threads, out_dir);
        if (compare->parsed()) return cmd_compare(c_a, c_b, c_grid, out_dir);
        if (fit->parsed()) return cmd_fit_overhead(f_tasks, f_jobs, out_dir);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
