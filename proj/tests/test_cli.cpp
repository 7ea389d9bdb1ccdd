#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "tabrl/hard_mdp.hpp"
#include "tabrl/io.hpp"
#include "tabrl/solve.hpp"

using namespace tabrl;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TABRL_CLI_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    CliResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.out.append(buf.data(), n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("tabrl_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("oracle values print for the hard instance", "[cli]") {
    const CliResult res = run_cli("hard-mdp --gamma 0.8 --oracle");
    REQUIRE(res.exit_code == 0);
    const json j = json::parse(res.out);
    const auto v = j.at("v_star").get<std::vector<double>>();
    const std::vector<double> want{0.0, 3.75, 3.75, 5.0};
    REQUIRE(v.size() == 4);
    for (int s = 0; s < 4; ++s) CHECK(v[s] == Catch::Approx(want[s]).margin(1e-12));
    CHECK(j.at("p").get<double>() == Catch::Approx(11.0 / 12.0).margin(1e-14));
}

TEST_CASE("emitted instances validate and round-trip", "[cli]") {
    TempDir dir;
    const CliResult emit =
        run_cli("hard-mdp emit --gamma 0.9 --out " + dir.file("hard.json"));
    REQUIRE(emit.exit_code == 0);
    const TabularMdp loaded = load_mdp(dir.file("hard.json"));
    CHECK(loaded.transition == build_hard_mdp(0.9).transition);

    const CliResult check = run_cli("validate " + dir.file("hard.json"));
    CHECK(check.exit_code == 0);
    CHECK(check.out.find("valid") != std::string::npos);
}

TEST_CASE("validate reports violations with exit code 2", "[cli]") {
    TempDir dir;
    TabularMdp broken = build_hard_mdp(0.8);
    broken.transition[0] = 0.4;
    atomic_write(dir.file("bad.json"), mdp_to_json(broken).dump());
    const CliResult res = run_cli("validate " + dir.file("bad.json"));
    CHECK(res.exit_code == 2);
    const json j = json::parse(res.out);
    REQUIRE(j.is_array());
    CHECK(j.at(0).at("constraint") == "row-sum");
}

TEST_CASE("unknown flags exit with the usage code", "[cli]") {
    CHECK(run_cli("--definitely-not-a-flag").exit_code == 1);
    CHECK(run_cli("hard-mdp --gamma 0.8 --bogus").exit_code == 1);
}

TEST_CASE("non-convergence exits with code 3", "[cli]") {
    TempDir dir;
    save_mdp(random_mdp(3, 2, 1618, 0.99), dir.file("slow.json"));
    const CliResult res = run_cli("solve --mdp " + dir.file("slow.json") + " --max-iters 2");
    CHECK(res.exit_code == 3);
}

TEST_CASE("the output directory override redirects relative paths", "[cli]") {
    TempDir dir;
    const std::string cmd = "TABRL_OUTPUT_DIR=" + dir.path.string() +
                            " " TABRL_CLI_PATH " hard-mdp emit --gamma 0.8 --out sub/inst.json";
    REQUIRE(std::system((cmd + " > /dev/null 2>&1").c_str()) == 0);
    CHECK(std::filesystem::exists(dir.path / "sub" / "inst.json"));
}

TEST_CASE("solve output matches the in-process solver", "[cli]") {
    TempDir dir;
    const TabularMdp m = random_mdp(3, 2, 3141, 0.9);
    save_mdp(m, dir.file("m.json"));
    const CliResult res = run_cli("solve --mdp " + dir.file("m.json"));
    REQUIRE(res.exit_code == 0);
    const json j = json::parse(res.out);
    const auto sol = value_iteration(m);
    const auto data = j.at("q_star").at("data").get<std::vector<double>>();
    REQUIRE(data.size() == sol.q_star.data.size());
    for (size_t i = 0; i < data.size(); ++i)
        CHECK(data[i] == Catch::Approx(sol.q_star.data[i]).margin(1e-12));
}

TEST_CASE("train with a solve-backed oracle reproduces the in-process run", "[cli]") {
    TempDir dir;
    const TabularMdp m = random_mdp(3, 2, 2718, 0.9);
    save_mdp(m, dir.file("m.json"));

    RunSpec spec;
    spec.algorithm = Algorithm::sync_q;
    spec.instance.kind = InstanceSource::Kind::file;
    spec.instance.path = dir.file("m.json");
    spec.schedule = Schedule::rescaled_linear(0.9, 2000);
    spec.iterations = 2000;
    spec.seed = 99;
    spec.checkpoint_every = 500;
    atomic_write(dir.file("run.json"), run_spec_to_json(spec).dump());

    const CliResult res = run_cli("train --config " + dir.file("run.json") +
                                  " --oracle-from-solve --out " + dir.file("rec.json") +
                                  " --checkpoints-csv " + dir.file("cp.csv"));
    REQUIRE(res.exit_code == 0);

    // reproduce in process
    Schedule sched = spec.schedule;
    sched.gamma = 0.9;
    sched.horizon_T = 2000;
    RunConfig cfg;
    cfg.schedule = sched;
    cfg.iterations = 2000;
    cfg.seed = 99;
    cfg.checkpoint_every = 500;
    const auto truth = value_iteration(m);
    const auto rec = run_sync_q(m, cfg, &truth.q_star);

    const json record = load_json(dir.file("rec.json"));
    const auto final_data = record.at("final_estimate").at("data").get<std::vector<double>>();
    CHECK(final_data == rec.final_estimate.data);
    const auto cps = record.at("checkpoints");
    REQUIRE(cps.size() == rec.checkpoints.size());
    for (size_t i = 0; i < rec.checkpoints.size(); ++i)
        CHECK(cps.at(i).at("sup_error").get<double>() == rec.checkpoints[i].sup_error);

    std::ifstream csv(dir.file("cp.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,sup_error");
}

TEST_CASE("diagnose prints chain statistics", "[cli]") {
    TempDir dir;
    const TabularMdp m = random_mdp(3, 2, 515, 0.9);
    save_mdp(m, dir.file("m.json"));
    const CliResult res = run_cli("diagnose --mdp " + dir.file("m.json"));
    REQUIRE(res.exit_code == 0);
    const json j = json::parse(res.out);
    CHECK(j.at("ergodic").get<bool>());
    CHECK(j.at("mu_min").get<double>() > 0.0);
    CHECK(j.at("t_mix").get<long long>() >= 1);
    double sum = 0.0;
    for (double v : j.at("stationary").get<std::vector<double>>()) sum += v;
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("sweep writes csv and summary from a config file", "[cli]") {
    TempDir dir;
    SweepConfig cfg;
    cfg.algorithm = Algorithm::sync_td;
    cfg.instance.kind = InstanceSource::Kind::random_mrp;
    cfg.instance.states = 3;
    cfg.instance.seed = 606;
    cfg.gamma_grid = {0.8};
    cfg.t_grid = {50, 500, 5000};
    cfg.schedule_template = Schedule::rescaled_linear(0.8, 2, 1.0, 2);
    cfg.runs_per_cell = 4;
    cfg.seed = 99;
    cfg.bootstrap_resamples = 50;
    atomic_write(dir.file("sweep.json"), sweep_to_json(cfg).dump());

    const CliResult res = run_cli("sweep --config " + dir.file("sweep.json") + " --out " +
                                  dir.file("runs.csv") + " --summary " + dir.file("summary.json"));
    REQUIRE(res.exit_code == 0);
    const json summary = load_json(dir.file("summary.json"));
    CHECK(summary.at("fit").contains("slope"));
    CHECK(summary.at("cells").size() == 3);

    std::ifstream csv(dir.file("runs.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "algorithm,gamma,T,seed,error,walltime");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 12); // 3 cells x 4 runs
}
