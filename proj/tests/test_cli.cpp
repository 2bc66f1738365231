// Drives the installed CLI binary end to end: flag grammar, exit codes,
// files, manifests, determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliOutput {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliOutput run_cli(const std::string& args) {
    static int counter = 0;
    std::string out_file = "cli_out_" + std::to_string(counter) + ".txt";
    std::string err_file = "cli_err_" + std::to_string(counter) + ".txt";
    ++counter;
    std::string cmd = std::string(PARQ_CLI_PATH) + " " + args + " > " + out_file +
                      " 2> " + err_file;
    int rc = std::system(cmd.c_str());
    CliOutput result;
    result.exit_code = WEXITSTATUS(rc);
    std::ifstream o(out_file), e(err_file);
    std::stringstream so, se;
    so << o.rdbuf();
    se << e.rdbuf();
    result.out = so.str();
    result.err = se.str();
    std::remove(out_file.c_str());
    std::remove(err_file.c_str());
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double json_number(const std::string& text, const std::string& key) {
    auto pos = text.find("\"" + key + "\"");
    REQUIRE(pos != std::string::npos);
    pos = text.find(':', pos);
    return std::stod(text.substr(pos + 1));
}

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("simulate: two deterministic tasks in parallel take 1 ms") {
    ScratchDir dir("cli_sim1");
    CliOutput r = run_cli("simulate --model sm --l 2 --k 2 --arrival det:10 "
                          "--exec det:1 --jobs 1 --out-dir " + dir.str());
    CHECK(r.exit_code == 0);
    std::string summary = slurp(dir.str() + "/sm_l2_k2_s1.summary.json");
    CHECK(json_number(summary, "mean_sojourn") == 1.0);
    std::string manifest = slurp(dir.str() + "/manifest.json");
    CHECK(manifest.find("\"command\": \"simulate\"") != std::string::npos);
    CHECK(manifest.find("\"tool_version\": \"parq") != std::string::npos);
    CHECK(json_number(manifest, "seed") == 1.0);
    // 16-hex digest
    auto pos = manifest.find("\"config_digest\": \"");
    REQUIRE(pos != std::string::npos);
    CHECK(manifest[pos + 18 + 16] == '"');
}

TEST_CASE("simulate: reruns with the same seed produce identical files") {
    ScratchDir a("cli_det_a"), b("cli_det_b");
    std::string flags = "simulate --model sqfj --l 50 --k 100 --arrival exp:0.5 "
                        "--exec exp:2 --jobs 3000 --seed 7 --no-tasks --out-dir ";
    CHECK(run_cli(flags + a.str()).exit_code == 0);
    CHECK(run_cli(flags + b.str()).exit_code == 0);
    CHECK(slurp(a.str() + "/sqfj_l50_k100_s7.jobs.csv") ==
          slurp(b.str() + "/sqfj_l50_k100_s7.jobs.csv"));
    CHECK(slurp(a.str() + "/sqfj_l50_k100_s7.summary.json") ==
          slurp(b.str() + "/sqfj_l50_k100_s7.summary.json"));
}

TEST_CASE("simulate: k < l is a usage error naming the field") {
    ScratchDir dir("cli_bad");
    CliOutput r = run_cli("simulate --model sm --l 4 --k 2 --arrival det:10 "
                          "--exec det:1 --jobs 1 --out-dir " + dir.str());
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("k must be >= l") != std::string::npos);
}

TEST_CASE("bound: M|M|1 waiting quantile") {
    ScratchDir dir("cli_bound");
    CliOutput r = run_cli("bound --model mm1 --lambda 0.5 --mu 1 --eps 1e-3 "
                          "--metric waiting --out-dir " + dir.str());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"feasible\": true") != std::string::npos);
    CHECK(json_number(r.out, "tau_s") == doctest::Approx(13.8155).epsilon(1e-4));
    CHECK(json_number(r.out, "theta_star") == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(slurp(dir.str() + "/bound.json") == r.out);
}

TEST_CASE("bound: unstable split-merge prints feasible=false and exits 0") {
    ScratchDir dir("cli_bound_sm");
    CliOutput r = run_cli("bound --model sm-tiny --l 50 --k 50 --lambda 0.5 --mu 1 "
                          "--eps 1e-6 --out-dir " + dir.str());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"feasible\": false") != std::string::npos);
}

TEST_CASE("bound: single-task fork-join equals the M|M|1 output") {
    ScratchDir d1("cli_b1"), d2("cli_b2");
    CliOutput mm1 = run_cli("bound --model mm1 --lambda 0.5 --mu 1 --eps 1e-3 "
                            "--out-dir " + d1.str());
    CliOutput fj = run_cli("bound --model fj-tiny --l 1 --k 1 --lambda 0.5 --mu 1 "
                           "--eps 1e-3 --out-dir " + d2.str());
    CHECK(mm1.exit_code == 0);
    CHECK(fj.exit_code == 0);
    CHECK(json_number(fj.out, "tau_ms") ==
          doctest::Approx(json_number(mm1.out, "tau_ms")).epsilon(1e-9));
}

TEST_CASE("bound: k-list sweep writes the pinned CSV") {
    ScratchDir dir("cli_bsweep");
    CliOutput r = run_cli("bound --model fj-tiny --l 50 --lambda 0.5 --k-list 50,100 "
                          "--eps-list 1e-2,1e-6 --out-dir " + dir.str());
    CHECK(r.exit_code == 0);
    std::string csv = slurp(dir.str() + "/bounds.csv");
    CHECK(csv.find("k,epsilon,theta_star,tau_ms,feasible\n") == 0);
    CHECK(csv.find("\n50,0.01,") != std::string::npos);
}

TEST_CASE("stability: analytic table") {
    ScratchDir dir("cli_stab");
    CliOutput r = run_cli("stability --analytic --l-list 1,2,10 --kappa 1 --out-dir " +
                          dir.str());
    CHECK(r.exit_code == 0);
    std::string csv = slurp(dir.str() + "/stability_kappa1.000000.csv");
    CHECK(csv.find("l,kappa,rho_max_tiny,rho_max_big\n") == 0);
    CHECK(csv.find("\n2,1,0.66666666") != std::string::npos);
}

TEST_CASE("stability: simulated curve over k") {
    ScratchDir dir("cli_stabk");
    CliOutput r = run_cli("stability --model sm --l 5 --k 5 --exec exp:1 "
                          "--k-list 5,10 --jobs 15000 --out-dir " + dir.str());
    CHECK(r.exit_code == 0);
    std::string csv = slurp(dir.str() + "/sm_l5_stability_s1.csv");
    CHECK(csv.find("k,kappa,rho_max_sim,rho_max_tiny,rho_max_big") == 0);
    CHECK(csv.find("\n5,1,") != std::string::npos);
    CHECK(csv.find(",ok") != std::string::npos);
}

TEST_CASE("sweep: small fork-join sweep produces rows and a manifest") {
    ScratchDir dir("cli_sweep");
    CliOutput r = run_cli("sweep --model sqfj --l 3 --k 3 --arrival exp:0.5 "
                          "--values 3,6 --jobs 3000 --eps-list 0.01 --out-dir " +
                          dir.str());
    CHECK(r.exit_code == 0);
    std::string csv = slurp(dir.str() + "/sqfj_l3_k-sweep_s1.csv");
    CHECK(csv.find("k,l,k,lambda_per_s") == 0);
    CHECK(csv.find(",ok") != std::string::npos);
    CHECK(fs::exists(dir.path / "manifest.json"));
}

TEST_CASE("compare: a run against itself has zero deltas") {
    ScratchDir sim("cli_cmp_sim"), cmp("cli_cmp_out");
    CHECK(run_cli("simulate --model sqfj --l 3 --k 6 --arrival exp:0.5 --exec exp:1 "
                  "--jobs 2000 --no-tasks --out-dir " + sim.str()).exit_code == 0);
    CliOutput r = run_cli("compare --a " + sim.str() + " --b " + sim.str() +
                          " --out-dir " + cmp.str());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"delta_ms\": 0") != std::string::npos);
    CHECK(fs::exists(cmp.path / "pp.csv"));
}

TEST_CASE("compare: a missing input is a runtime error (exit 2)") {
    ScratchDir dir("cli_cmp_bad");
    CliOutput r = run_cli("compare --a nope.csv --b nope.csv --out-dir " + dir.str());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("nope.csv") != std::string::npos);
}

TEST_CASE("fit-overhead: synthetic line recovered from files") {
    ScratchDir dir("cli_fit");
    {
        std::ofstream jobs(dir.path / "jobs.csv");
        jobs << "job,arrival_ms,first_start_ms,last_finish_ms,departure_ms,sojourn_ms,"
                "waiting_ms,workload_ms,service_ms\n";
        jobs << "1,0,0,100,123.7,123.7,0,10,100\n";
        jobs << "2,0,0,200,238.5,238.5,0,10,200\n";
    }
    {
        std::ofstream tasks(dir.path / "tasks.csv");
        tasks << "job,task,start_ms,exec_ms,overhead_ms,service_ms,finish_ms\n";
        for (int t = 1; t <= 500; ++t) tasks << "1," << t << ",0,1,0,1,1\n";
        for (int t = 1; t <= 2500; ++t) tasks << "2," << t << ",0,1,0,1,1\n";
    }
    CliOutput r = run_cli("fit-overhead --tasks " + (dir.path / "tasks.csv").string() +
                          " --jobs " + (dir.path / "jobs.csv").string() + " --out-dir " +
                          dir.str());
    CHECK(r.exit_code == 0);
    std::string fit = slurp(dir.str() + "/overhead_fit.json");
    CHECK(json_number(fit, "c_pd_job_ms") == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(json_number(fit, "c_pd_task_ms") == doctest::Approx(0.0074).epsilon(1e-9));
}

TEST_CASE("overhead flag: 'paper' expands to the calibrated profile") {
    ScratchDir dir("cli_ovh");
    CliOutput r = run_cli("simulate --model sqfj --l 2 --k 2 --arrival det:100 "
                          "--exec det:1 --jobs 5 --overhead paper --no-tasks "
                          "--out-dir " + dir.str());
    CHECK(r.exit_code == 0);
    std::string summary = slurp(dir.str() + "/sqfj_l2_k2_s1.summary.json");
    CHECK(json_number(summary, "c_ts_task_ms") == 2.6);
    CHECK(json_number(summary, "mu_ts_task_per_s") == 2000.0);
    CHECK(json_number(summary, "c_pd_job_ms") == 20.0);
    CHECK(json_number(summary, "c_pd_task_ms") == doctest::Approx(7.4e-3).epsilon(1e-12));
}

TEST_CASE("unknown subcommand or missing required flag is a usage error") {
    CHECK(run_cli("frobnicate").exit_code == 1);
    CHECK(run_cli("bound --model mm1").exit_code == 1);  // --lambda required
}

TEST_CASE("PARQ_OUT_DIR provides the default output directory") {
    ScratchDir dir("cli_envdir");
    std::string cmd = "PARQ_OUT_DIR=" + dir.str() +
                      " " PARQ_CLI_PATH
                      " simulate --model sm --l 1 --k 1 --arrival det:5 --exec det:1"
                      " --jobs 1 --no-tasks > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(dir.path / "sm_l1_k1_s1.summary.json"));
    CHECK(fs::exists(dir.path / "manifest.json"));
}
