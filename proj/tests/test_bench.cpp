#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cctsp/bench.hpp"

using namespace cctsp;
namespace fs = std::filesystem;

namespace {

TspInstance make_instance(const std::string& name, int n, std::uint64_t seed) {
    RngStream rng(seed);
    TspInstance inst = generate_uniform_instance(n, rng);
    inst.name = name;
    return inst;
}

std::string make_instance_file(const fs::path& dir, const std::string& name, int n,
                               std::uint64_t seed) {
    TspInstance inst = make_instance(name, n, seed);
    const fs::path path = dir / (name + ".tsp");
    std::ofstream out(path);
    write_tsplib(out, inst);
    return path.string();
}

std::string strip_wall_ms(const std::string& csv) {
    // the summary line ends with ",<wall_ms>"; drop that last field
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line, prev;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i + 1 == lines.size()) {
            auto pos = lines[i].rfind(',');
            out << lines[i].substr(0, pos) << "\n";
        } else {
            out << lines[i] << "\n";
        }
    }
    return out.str();
}

}  // namespace

TEST_CASE("trial seeds are deterministic and cell sensitive") {
    const std::uint64_t a = trial_seed(1, "inst", "ga", 0);
    CHECK(a == trial_seed(1, "inst", "ga", 0));
    CHECK(a != trial_seed(2, "inst", "ga", 0));
    CHECK(a != trial_seed(1, "other", "ga", 0));
    CHECK(a != trial_seed(1, "inst", "pso", 0));
    CHECK(a != trial_seed(1, "inst", "ga", 1));
}

TEST_CASE("curve file names are sanitized") {
    CHECK(curve_file_name("kroA100", "ga", 3) == "kroA100_ga_trial3.csv");
    const std::string odd = curve_file_name("a b/c", "ccpnrl-ga", 0);
    CHECK(odd.find(' ') == std::string::npos);
    CHECK(odd.find('/') == std::string::npos);
}

TEST_CASE("run_trial covers every algorithm") {
    TspInstance inst = make_instance("t", 30, 5);
    EvoConfig evo;
    evo.population_size = 10;
    evo.max_iterations = 10;
    for (const std::string alg : {"ga", "pso", "ia"}) {
        TrialOutcome out = run_trial(inst, alg, evo, 5, "held-karp", nullptr, 1,
                                     false, 42);
        validate_permutation(out.report.best.order, 30);
        CHECK(out.stage1_ms == 0.0);
        CHECK(!out.elite.has_value());
    }
    TrialOutcome cc = run_trial(inst, "ccpnrl-ga", evo, 5, "held-karp", nullptr, 1,
                                false, 42);
    validate_permutation(cc.report.best.order, 30);
    REQUIRE(cc.elite.has_value());
    CHECK(cc.report.best_length <=
          tour_length(inst.cities, cc.elite->tour.order) + 1e-9);

    CHECK_THROWS_AS(run_trial(inst, "nope", evo, 5, "held-karp", nullptr, 1, false,
                              42),
                    Error);
}

TEST_CASE("trials are deterministic modulo wall time") {
    TspInstance inst = make_instance("d", 25, 9);
    EvoConfig evo;
    evo.population_size = 8;
    evo.max_iterations = 12;
    for (const std::string alg : {"ga", "pso", "ia", "ccpnrl-ga"}) {
        TrialOutcome a = run_trial(inst, alg, evo, 5, "two-opt", nullptr, 1, false,
                                   7);
        TrialOutcome b = run_trial(inst, alg, evo, 5, "two-opt", nullptr, 1, false,
                                   7);
        std::ostringstream sa, sb;
        write_trial_csv(sa, a.report);
        write_trial_csv(sb, b.report);
        CHECK(strip_wall_ms(sa.str()) == strip_wall_ms(sb.str()));
    }
}

TEST_CASE("bench run writes curves and a consistent summary") {
    const fs::path dir = fs::temp_directory_path() / "cctsp_bench_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    BenchConfig cfg;
    cfg.instance_paths = {make_instance_file(dir, "small_a", 20, 11),
                          make_instance_file(dir, "small_b", 20, 12)};
    cfg.algorithms = {"ga", "pso", "ia", "ccpnrl-ga"};
    cfg.trials = 2;
    cfg.evo.population_size = 8;
    cfg.evo.max_iterations = 10;
    cfg.k = 5;
    cfg.subsolver = "held-karp";
    cfg.out_dir = (dir / "out").string();
    cfg.master_seed = 3;
    cfg.workers = 2;

    BenchSummary summary = run_bench(cfg);
    CHECK(summary.all_ok);
    REQUIRE(summary.cells.size() == 8);
    for (const auto& cell : summary.cells) {
        CHECK(cell.trials_done == 2);
        CHECK(cell.error.empty());
        CHECK(cell.mean_final > 0.0);
        CHECK(cell.optimal_final > 0.0);
        CHECK(cell.optimal_final <= cell.mean_final + 1e-9);
        if (cell.algorithm == "ccpnrl-ga")
            CHECK(cell.mean_stage1_ms > 0.0);
        else
            CHECK(cell.mean_stage1_ms == 0.0);
    }

    // 2 instances x 4 algorithms x 2 trials curve files + summary.csv
    int curves = 0;
    bool has_summary = false;
    for (const auto& entry : fs::directory_iterator(cfg.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name == "summary.csv")
            has_summary = true;
        else if (name.find("_trial") != std::string::npos)
            ++curves;
    }
    CHECK(curves == 16);
    CHECK(has_summary);

    std::ostringstream diag;
    CHECK(check_bench_output(cfg.out_dir, diag));

    // corrupt one curve file: the check must fail
    const fs::path victim = fs::path(cfg.out_dir) / curve_file_name("small_a", "ga", 0);
    REQUIRE(fs::exists(victim));
    {
        std::ofstream out(victim, std::ios::app);
        out << "999,1.0\n";
    }
    std::ostringstream diag2;
    CHECK(!check_bench_output(cfg.out_dir, diag2));
    CHECK(!diag2.str().empty());

    fs::remove_all(dir);
}

TEST_CASE("single-trial summary statistics collapse") {
    const fs::path dir = fs::temp_directory_path() / "cctsp_bench_single";
    fs::remove_all(dir);
    fs::create_directories(dir);

    BenchConfig cfg;
    cfg.instance_paths = {make_instance_file(dir, "solo", 15, 21)};
    cfg.algorithms = {"ga"};
    cfg.trials = 1;
    cfg.evo.population_size = 6;
    cfg.evo.max_iterations = 5;
    cfg.out_dir = (dir / "out").string();

    BenchSummary summary = run_bench(cfg);
    REQUIRE(summary.cells.size() == 1);
    const auto& cell = summary.cells[0];
    CHECK(cell.mean_final == doctest::Approx(cell.optimal_final));
    CHECK(cell.stddev_final == doctest::Approx(0.0));

    fs::remove_all(dir);
}

TEST_CASE("summary csv layout") {
    BenchSummary s;
    CellStats c;
    c.instance = "i";
    c.algorithm = "ga";
    c.mean_final = 10.0;
    c.optimal_final = 9.0;
    c.stddev_final = 0.5;
    c.mean_wall_ms = 3.0;
    c.mean_stage1_ms = 0.0;
    c.trials_done = 2;
    s.cells.push_back(c);
    std::ostringstream out;
    write_summary_csv(out, s);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "instance,algorithm,trials,mean_final,optimal_final,stddev_final,"
          "mean_wall_ms,mean_stage1_ms,error");
    std::string row;
    std::getline(in, row);
    CHECK(row.rfind("i,ga,2,", 0) == 0);
}

TEST_CASE("bench records cell failures without aborting the run") {
    const fs::path dir = fs::temp_directory_path() / "cctsp_bench_fail";
    fs::remove_all(dir);
    fs::create_directories(dir);

    BenchConfig cfg;
    cfg.instance_paths = {make_instance_file(dir, "ok", 15, 31)};
    cfg.algorithms = {"ga", "ccpnrl-ga"};
    cfg.trials = 1;
    cfg.evo.population_size = 6;
    cfg.evo.max_iterations = 5;
    cfg.k = 14;                  // clusters of 14 break held-karp
    cfg.subsolver = "held-karp";
    cfg.out_dir = (dir / "out").string();

    BenchSummary summary = run_bench(cfg);
    CHECK(!summary.all_ok);
    REQUIRE(summary.cells.size() == 2);
    bool saw_failure = false, saw_success = false;
    for (const auto& cell : summary.cells) {
        if (cell.algorithm == "ccpnrl-ga") {
            CHECK(!cell.error.empty());
            saw_failure = true;
        } else {
            CHECK(cell.error.empty());
            saw_success = true;
        }
    }
    CHECK(saw_failure);
    CHECK(saw_success);

    fs::remove_all(dir);
}
