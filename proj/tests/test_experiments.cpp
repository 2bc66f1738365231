#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "parq/experiments.hpp"

using namespace parq;
using namespace parq::experiments;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

sim::SystemConfig sqfj_base(int l, int k) {
    sim::SystemConfig cfg;
    cfg.model = sim::Model::SingleQueueForkJoin;
    cfg.workers = l;
    cfg.tasks_per_job = k;
    cfg.arrival = Distribution::exponential(0.5);
    cfg.task_execution = Distribution::exponential(1.0);
    cfg.n_jobs = 8000;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("zero-overhead fork-join sweep never violates the analytical bound") {
    SweepSpec spec;
    spec.base = sqfj_base(5, 5);
    spec.vary = "k";
    spec.values = {5, 10, 20};
    spec.epsilons = {0.01};
    auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) {
        REQUIRE(row.ok);
        REQUIRE(row.analytic.size() == 1);
        REQUIRE(row.analytic[0].bound.feasible);
        // Th.-style bounds are conservative: the simulated 0.99 quantile
        // stays below tau(0.01)
        CHECK(row.summary.q99 <= row.analytic[0].bound.tau);
        CHECK(row.summary.stable);
        // constant-workload rule: mu = k / (l * workload)
        CHECK(row.config.task_execution.rate_per_s() ==
              doctest::Approx(row.value / 5.0).epsilon(1e-12));
    }
    write_sweep_csv(rows, "k", spec.epsilons, "sweep_test.csv");
    std::string csv = slurp("sweep_test.csv");
    CHECK(csv.find("k,l,k,lambda_per_s") == 0);
    CHECK(csv.find(",ok") != std::string::npos);
    std::remove("sweep_test.csv");
}

TEST_CASE("a failing sweep row is reported without aborting the sweep") {
    SweepSpec spec;
    spec.base = sqfj_base(5, 5);
    spec.values = {3, 10};  // k = 3 < l = 5 is invalid
    spec.epsilons = {0.01};
    auto rows = run_sweep(spec);
    CHECK_FALSE(rows[0].ok);
    CHECK(rows[0].error.find("k") != std::string::npos);
    CHECK(rows[1].ok);
}

TEST_CASE("sweep can vary lambda and l") {
    SweepSpec spec;
    spec.base = sqfj_base(4, 8);
    spec.vary = "lambda";
    spec.values = {0.2, 0.5};
    spec.epsilons = {0.01};
    spec.base.n_jobs = 2000;
    auto rows = run_sweep(spec);
    CHECK(rows[0].config.arrival.rate_per_s() == doctest::Approx(0.2));
    CHECK(rows[1].config.arrival.rate_per_s() == doctest::Approx(0.5));

    SweepSpec by_l;
    by_l.base = sqfj_base(4, 8);
    by_l.vary = "l";
    by_l.values = {2, 4};
    by_l.base.n_jobs = 2000;
    auto lrows = run_sweep(by_l);
    CHECK(lrows[0].config.workers == 2);
    // constant per-worker workload re-derives mu per l
    CHECK(lrows[0].config.task_execution.rate_per_s() ==
          doctest::Approx(8.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("overhead fit recovers an exact pre-departure line") {
    std::vector<sim::TaskRecord> tasks;
    std::vector<sim::JobRecord> jobs;
    long job_index = 1;
    for (int k : {500, 2500}) {
        for (int j = 0; j < 20; ++j, ++job_index) {
            double finish = 1000.0 * job_index;
            for (int t = 1; t <= k; ++t)
                tasks.push_back({job_index, t, finish - 1.0, 1.0, 0.0, 1.0, finish});
            sim::JobRecord rec;
            rec.index = job_index;
            rec.last_finish_ms = finish;
            rec.departure_ms = finish + 20.0 + 0.0074 * k;
            jobs.push_back(rec);
        }
    }
    OverheadFit fit = fit_overhead(tasks, jobs);
    CHECK_FALSE(fit.slope_undetermined);
    CHECK(fit.c_pd_job_ms == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(fit.c_pd_task_ms == doctest::Approx(0.0074).epsilon(1e-9));
    CHECK(fit.c_ts_task_ms == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.mu_ts_task_per_s == 0.0);
}

TEST_CASE("overhead fit recovers the constant-plus-exponential task model") {
    RngStream rng(2024, 8);
    std::vector<sim::TaskRecord> tasks;
    std::vector<sim::JobRecord> jobs;
    const int n_jobs = 100, k = 1000;
    for (long j = 1; j <= n_jobs; ++j) {
        for (int t = 1; t <= k; ++t) {
            double overhead = 2.6 + rng.next_exponential(2.0);  // rate 2000/s = 2/ms
            tasks.push_back({j, t, 0.0, 5.0, overhead, 5.0 + overhead, 5.0 + overhead});
        }
        sim::JobRecord rec;
        rec.index = j;
        rec.last_finish_ms = 100.0 * j;
        rec.departure_ms = 100.0 * j;
        jobs.push_back(rec);
    }
    OverheadFit fit = fit_overhead(tasks, jobs);
    CHECK(std::abs(fit.c_ts_task_ms - 2.6) <= 0.1);
    CHECK(std::abs(fit.mu_ts_task_per_s - 2000.0) <= 100.0);
    CHECK(fit.slope_undetermined);  // a single k in the data
    CHECK(fit.c_pd_task_ms == 0.0);
}

TEST_CASE("all-zero overheads fit to all-zero parameters") {
    std::vector<sim::TaskRecord> tasks;
    std::vector<sim::JobRecord> jobs;
    for (long j = 1; j <= 50; ++j) {
        for (int t = 1; t <= 4; ++t) tasks.push_back({j, t, 0.0, 2.0, 0.0, 2.0, 2.0});
        sim::JobRecord rec;
        rec.index = j;
        rec.last_finish_ms = 10.0 * j;
        rec.departure_ms = 10.0 * j;
        jobs.push_back(rec);
    }
    OverheadFit fit = fit_overhead(tasks, jobs);
    CHECK(fit.c_ts_task_ms == 0.0);
    CHECK(fit.mu_ts_task_per_s == 0.0);
    CHECK(fit.c_pd_job_ms == 0.0);
    CHECK(fit.c_pd_task_ms == 0.0);
}

TEST_CASE("trace export and ingest round-trip") {
    sim::SystemConfig cfg = sqfj_base(3, 6);
    cfg.n_jobs = 200;
    cfg.record_tasks = true;
    sim::SimResult res = sim::run(cfg);
    res.write_jobs_csv("rt_jobs.csv");
    res.write_tasks_csv("rt_tasks.csv");

    TraceDataset ds = ingest_trace("rt_jobs.csv", "rt_tasks.csv");
    CHECK(ds.rejected.empty());
    REQUIRE(ds.jobs.size() == res.jobs.size());
    REQUIRE(ds.tasks.size() == res.tasks.size());
    for (std::size_t i = 0; i < ds.jobs.size(); ++i) {
        CHECK(ds.jobs[i].index == res.jobs[i].index);
        CHECK(ds.jobs[i].sojourn_ms ==
              doctest::Approx(res.jobs[i].sojourn_ms).epsilon(1e-11));
        CHECK(ds.jobs[i].departure_ms ==
              doctest::Approx(res.jobs[i].departure_ms).epsilon(1e-11));
    }
    for (std::size_t i = 0; i < ds.tasks.size(); ++i) {
        CHECK(ds.tasks[i].job == res.tasks[i].job);
        CHECK(ds.tasks[i].task == res.tasks[i].task);
        CHECK(ds.tasks[i].service_ms ==
              doctest::Approx(res.tasks[i].service_ms).epsilon(1e-11));
    }
    std::remove("rt_jobs.csv");
    std::remove("rt_tasks.csv");
}

TEST_CASE("schema errors name the missing column") {
    {
        std::ofstream out("bad_tasks.csv");
        out << "job,task,start_ms,overhead_ms,service_ms,finish_ms\n";  // no exec_ms
        out << "1,1,0,0,1,1\n";
    }
    {
        std::ofstream out("ok_jobs.csv");
        out << "job,arrival_ms,first_start_ms,last_finish_ms,departure_ms,sojourn_ms,"
               "waiting_ms,workload_ms,service_ms\n";
        out << "1,0,0,1,1,1,0,1,1\n";
    }
    CHECK_THROWS_WITH_AS(ingest_trace("ok_jobs.csv", "bad_tasks.csv"),
                         doctest::Contains("exec_ms"), std::runtime_error);
    std::remove("bad_tasks.csv");
    std::remove("ok_jobs.csv");
}

TEST_CASE("inconsistent rows are rejected individually with reasons") {
    {
        std::ofstream out("jobs3.csv");
        out << "job,arrival_ms,first_start_ms,last_finish_ms,departure_ms,sojourn_ms,"
               "waiting_ms,workload_ms,service_ms\n";
        out << "1,0,0,10,10,10,0,10,10\n";
        out << "2,1,2,12,12,11,0,10,10\n";
        out << "3,2,3,13,13,11,0,10,10\n";
    }
    {
        std::ofstream out("tasks3.csv");
        out << "job,task,start_ms,exec_ms,overhead_ms,service_ms,finish_ms\n";
        out << "1,1,0,5,0,5,5\n";
        out << "2,1,8,4,0,4,2\n";  // finish before start
        out << "3,1,9,4,0,4,13\n";
    }
    TraceDataset ds = ingest_trace("jobs3.csv", "tasks3.csv");
    CHECK(ds.jobs.size() == 3);
    CHECK(ds.tasks.size() == 2);
    REQUIRE(ds.rejected.size() == 1);
    CHECK(ds.rejected[0].find("finish before start") != std::string::npos);
    CHECK(ds.rejected[0].find("job 2") != std::string::npos);
    std::remove("jobs3.csv");
    std::remove("tasks3.csv");
}

TEST_CASE("comparing a sample with itself gives the diagonal and zero deltas") {
    sim::SimResult res = sim::run(sqfj_base(3, 6));
    EmpiricalSample s = res.sojourn_sample();
    CompareReport report = compare_sojourns(s, s, 128);
    for (auto [fa, fb] : report.pp) CHECK(fa == fb);
    for (const auto& d : report.deltas) CHECK(d.a_ms == d.b_ms);
}

TEST_CASE("independent seeds at the same config stay within sampling noise") {
    sim::SystemConfig a = sqfj_base(50, 100);
    a.task_execution = Distribution::exponential(2.0);
    a.n_jobs = 100000;
    a.seed = 1;
    sim::SystemConfig b = a;
    b.seed = 2;
    EmpiricalSample sa = sim::run(a).sojourn_sample();
    EmpiricalSample sb = sim::run(b).sojourn_sample();
    double max_dev = 0.0;
    for (auto [fa, fb] : compare_sojourns(sa, sb).pp)
        max_dev = std::max(max_dev, std::abs(fa - fb));
    CHECK(max_dev < 0.02);
}

TEST_CASE("overhead shifts the sojourn distribution right") {
    sim::SystemConfig plain = sqfj_base(50, 2500);
    plain.task_execution = Distribution::exponential(50.0);
    plain.n_jobs = 8000;
    sim::SystemConfig loaded = plain;
    loaded.overhead = sim::OverheadParams::calibrated();
    EmpiricalSample s_plain = sim::run(plain).sojourn_sample();
    EmpiricalSample s_loaded = sim::run(loaded).sojourn_sample();
    CompareReport report = compare_sojourns(s_plain, s_loaded);
    // the overhead-free system departs earlier: the PP curve stays below
    // the diagonal over the lower half
    for (auto [fa, fb] : report.pp)
        if (fa <= 0.5) CHECK(fb <= fa + 1e-12);
    CHECK(report.deltas[2].b_ms > report.deltas[2].a_ms);
}

TEST_CASE("stability curve pairs simulation with the analytical values") {
    sim::SystemConfig cfg;
    cfg.model = sim::Model::SplitMerge;
    cfg.workers = 10;
    cfg.tasks_per_job = 10;
    cfg.arrival = Distribution::exponential(1.0);
    cfg.task_execution = Distribution::exponential(1.0);
    cfg.n_jobs = 20000;
    cfg.warmup_jobs = 0;
    auto points = stability_curve(cfg, {10, 20});
    REQUIRE(points.size() == 2);
    for (const auto& p : points) {
        REQUIRE(p.ok);
        CHECK(p.sim_max == doctest::Approx(p.tiny_max).epsilon(0.05 / p.tiny_max));
        CHECK_FALSE(std::isnan(p.big_max));
        CHECK(p.big_max <= p.tiny_max + 1e-12);
    }
    write_stability_csv(points, "stab_test.csv");
    std::string csv = slurp("stab_test.csv");
    CHECK(csv.find("k,kappa,rho_max_sim,rho_max_tiny,rho_max_big") == 0);
    std::remove("stab_test.csv");
}

TEST_CASE("analytic stability table has the pinned header") {
    write_stability_analytic_csv({1, 2, 50}, 1.0, "stab_an.csv");
    std::string csv = slurp("stab_an.csv");
    CHECK(csv.find("l,kappa,rho_max_tiny,rho_max_big\n") == 0);
    CHECK(csv.find("1,1,1,") != std::string::npos);
    std::remove("stab_an.csv");
}
