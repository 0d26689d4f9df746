#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "run_config.hpp"
#include "survbv/data_io.hpp"

using namespace survbv;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "survbv");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("survbv_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const std::string pbc = (fs::path(SURVBV_SOURCE_DIR) / "data" / "pbc.csv").string();

std::string smoke_config(const fs::path& dir) {
    const auto path = dir / "smoke.yaml";
    write_file(path, R"(dataset:
  synthetic: {n: 120, beta: [1.0, -0.5, 0.0], censoring: 0.3, seed: 3}
protocol:
  repetitions: 3
  replicates_per_size: 5
  training_sizes: [30, 60]
  master_seed: 11
algorithms:
  - kind: coxph
  - kind: coxpath
    n_lambda: 20
output_dir: out
)");
    return path.string();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("usage and help") {
    CHECK(run({}).code == cli::kUsageError);
    const auto help = run({"--help"});
    CHECK(help.code == cli::kSuccess);
    for (const char* sub : {"fit", "experiment", "synth", "cindex"}) CHECK(help.out.find(sub) != std::string::npos);

    const auto fit_help = run({"fit", "--help"});
    CHECK(fit_help.code == cli::kSuccess);
    for (const char* flag : {"--data", "--time-col", "--event-col", "--features", "--algo", "--selection",
                             "--fixed-lambda", "--folds", "--n-lambda", "--lambda-min-ratio", "--seed"}) {
        CHECK_MESSAGE(fit_help.out.find(flag) != std::string::npos, flag);
    }
    const auto exp_help = run({"experiment", "--help"});
    for (const char* flag : {"--config", "--seed", "--workers", "--repetitions", "--replicates", "--sizes", "--out",
                             "--quiet"}) {
        CHECK_MESSAGE(exp_help.out.find(flag) != std::string::npos, flag);
    }
    CHECK(run({"fit", "--data", pbc, "--bogus"}).code == cli::kUsageError);
    CHECK(run({"frobnicate"}).code == cli::kUsageError);
    CHECK(run({"fit", "--data", pbc, "--algo", "svm"}).code == cli::kUsageError);
}

TEST_CASE("fit prints named coefficients") {
    const auto r = run({"fit", "--data", pbc, "--algo", "coxph"});
    REQUIRE(r.code == cli::kSuccess);
    const auto start = r.out.find("coefficients:\n");
    REQUIRE(start != std::string::npos);
    std::istringstream lines(r.out.substr(start));
    std::string line;
    std::getline(lines, line);
    std::size_t named = 0;
    while (std::getline(lines, line) && line.rfind("  ", 0) == 0) ++named;
    CHECK(named == 17);
    CHECK(r.out.find("bili") != std::string::npos);
    CHECK(r.out.find("in-sample concordance") != std::string::npos);
    CHECK(r.err.find("dropped 142") != std::string::npos);

    const auto path = run({"fit", "--data", pbc, "--algo", "coxpath", "--n-lambda", "30"});
    CHECK(path.code == cli::kSuccess);
    CHECK(path.out.find("selected lambda") != std::string::npos);
}

TEST_CASE("fit on constant covariates gives the null model") {
    const auto dir = scratch("const");
    write_file(dir / "const.csv", "time,status,a,b\n1,1,2,5\n2,0,2,5\n3,1,2,5\n4,1,2,5\n5,0,2,5\n");
    const auto r = run({"fit", "--data", (dir / "const.csv").string()});
    REQUIRE(r.code == cli::kSuccess);
    CHECK(std::regex_search(r.out, std::regex("\n  a +0\n  b +0\n")));
    CHECK(r.out.find("in-sample concordance: 0.5\n") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("fixed lambda at lambda_max reports an empty model") {
    const auto r = run({"fit", "--data", pbc, "--algo", "coxpath", "--fixed-lambda", "max"});
    REQUIRE(r.code == cli::kSuccess);
    CHECK(r.out.find("empty model") != std::string::npos);
    CHECK(r.out.find("in-sample concordance: 0.5\n") != std::string::npos);
}

TEST_CASE("data errors exit with code 2") {
    CHECK(run({"fit", "--data", "/nonexistent.csv"}).code == cli::kDataError);
    const auto dir = scratch("bad");
    write_file(dir / "bad.csv", "time,status,x\n1,1,abc\n");
    const auto r = run({"fit", "--data", (dir / "bad.csv").string()});
    CHECK(r.code == cli::kDataError);
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(run({"fit", "--data", (dir / "bad.csv").string(), "--event-col", "dead"}).code == cli::kDataError);
    fs::remove_all(dir);
}

TEST_CASE("synth writes a calibrated, reproducible dataset") {
    const auto dir = scratch("synth");
    const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    const std::vector<std::string> flags{"--n", "2000", "--beta", "1,-1,0", "--censoring", "0.3", "--seed", "7"};
    auto args = std::vector<std::string>{"synth", "--out", a};
    args.insert(args.end(), flags.begin(), flags.end());
    REQUIRE(run(args).code == cli::kSuccess);
    args[2] = b;
    REQUIRE(run(args).code == cli::kSuccess);
    CHECK(slurp(a) == slurp(b));
    CHECK(fs::exists(a + ".truth.json"));

    const auto d = load_csv(a);
    CHECK(d.n() == 2000);
    CHECK(d.p() == 3);
    CHECK(std::abs(1.0 - static_cast<double>(d.event_count()) / 2000.0 - 0.3) <= 0.05);

    const auto none = (dir / "none.csv").string();
    REQUIRE(run({"synth", "--n", "50", "--beta", "0.5", "--censoring", "0", "--out", none}).code == cli::kSuccess);
    CHECK(load_csv(none).event_count() == 50);

    CHECK(run({"synth", "--n", "50", "--beta", "0.5", "--censoring", "1.5", "--out", none}).code == cli::kUsageError);
    fs::remove_all(dir);
}

TEST_CASE("cindex scores a file against a dataset") {
    const auto dir = scratch("cindex");
    write_file(dir / "d.csv", "time,status,x\n1,1,0\n2,1,0\n3,1,0\n");
    write_file(dir / "good.txt", "score\n3\n2\n1\n");
    write_file(dir / "flat.txt", "7\n7\n7\n");
    write_file(dir / "short.txt", "1\n2\n");
    const auto data = (dir / "d.csv").string();
    const auto good = run({"cindex", "--data", data, "--scores", (dir / "good.txt").string()});
    CHECK(good.code == cli::kSuccess);
    CHECK(good.out.find("concordance: 1\n") != std::string::npos);
    CHECK(run({"cindex", "--data", data, "--scores", (dir / "flat.txt").string()}).out.find("concordance: 0.5\n") !=
          std::string::npos);
    CHECK(run({"cindex", "--data", data, "--scores", (dir / "short.txt").string()}).code != cli::kSuccess);
    fs::remove_all(dir);
}

TEST_CASE("experiment smoke run") {
    const auto dir = scratch("smoke");
    const auto config = smoke_config(dir);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run({"experiment", "--config", config, "--repetitions", "1", "--replicates", "2", "--sizes", "50",
                        "--quiet"});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(r.code == cli::kSuccess);
    CHECK(seconds < 10.0);
    const auto csv = slurp(dir / "out" / "curves.csv");
    CHECK(count_lines(csv) == 3);
    CHECK(fs::exists(dir / "out" / "run_meta.json"));
    CHECK(r.err.empty());
    fs::remove_all(dir);
}

TEST_CASE("experiment output is byte-identical across runs and worker counts") {
    const auto dir = scratch("determinism");
    const auto config = smoke_config(dir);
    const auto first = run({"experiment", "--config", config, "--out", (dir / "a").string(), "--workers", "1"});
    REQUIRE(first.code == cli::kSuccess);
    CHECK(first.err.find("repetition") != std::string::npos);
    REQUIRE(run({"experiment", "--config", config, "--out", (dir / "b").string(), "--workers", "1", "--quiet"}).code ==
            cli::kSuccess);
    REQUIRE(run({"experiment", "--config", config, "--out", (dir / "c").string(), "--workers", "3", "--quiet"}).code ==
            cli::kSuccess);
    const auto a = slurp(dir / "a" / "curves.csv");
    CHECK(count_lines(a) == 5);
    CHECK(a == slurp(dir / "b" / "curves.csv"));
    CHECK(a == slurp(dir / "c" / "curves.csv"));
    CHECK(slurp(dir / "a" / "run_meta.json") == slurp(dir / "c" / "run_meta.json"));

    REQUIRE(run({"experiment", "--config", config, "--out", (dir / "d").string(), "--seed", "12", "--quiet"}).code ==
            cli::kSuccess);
    CHECK(a != slurp(dir / "d" / "curves.csv"));
    fs::remove_all(dir);
}

TEST_CASE("SURVBV_SEED is the fallback seed") {
    const auto dir = scratch("env");
    const auto config = smoke_config(dir);
    const std::vector<std::string> base{"experiment", "--config", config, "--quiet", "--repetitions", "1"};
    auto with = [&](const std::string& out, std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), {"--out", (dir / out).string()});
        args.insert(args.end(), extra.begin(), extra.end());
        REQUIRE(run(args).code == cli::kSuccess);
        return slurp(dir / out / "curves.csv");
    };
    const auto seeded_flag = with("flag", {"--seed", "99"});
    ::setenv("SURVBV_SEED", "99", 1);
    const auto from_env = with("env", {});
    const auto flag_wins = with("flag2", {"--seed", "11"});
    ::setenv("SURVBV_SEED", "not-a-number", 1);
    CHECK(run({"experiment", "--config", config, "--quiet"}).code == cli::kUsageError);
    ::unsetenv("SURVBV_SEED");
    const auto from_config = with("config", {});
    CHECK(from_env == seeded_flag);
    CHECK(flag_wins == from_config);
    CHECK(from_env != from_config);
    fs::remove_all(dir);
}

TEST_CASE("numerical failures exit with code 3") {
    const auto dir = scratch("numerical");
    std::string csv = "time,status,x\n";
    for (int i = 1; i <= 60; ++i) csv += std::to_string(i) + "," + (i == 4 || i == 40 ? "1" : "0") + "," +
                                         std::to_string(i % 7) + "\n";
    write_file(dir / "sparse.csv", csv);
    write_file(dir / "c.yaml", R"(dataset: {path: sparse.csv}
protocol: {training_sizes: [5], max_redraws: 3, repetitions: 1, replicates_per_size: 2}
algorithms: [{kind: coxph}]
output_dir: out
)");
    const auto r = run({"experiment", "--config", (dir / "c.yaml").string(), "--quiet"});
    CHECK(r.code == cli::kNumericalFailure);
    CHECK_FALSE(fs::exists(dir / "out" / "curves.csv"));
    fs::remove_all(dir);
}

TEST_CASE("run configuration parsing") {
    const fs::path base = "/tmp/base";
    const auto c = cli::parse_run_config(R"(dataset:
  path: data/x.csv
  time_column: days
  features: [a, b]
protocol:
  test_fraction: 0.25
  training_sizes: [10, 20]
algorithms:
  - kind: coxpath
    name: lasso
    selection: cv_cindex
    folds: 3
    lambda_min_ratio: 0.1
  - kind: coxph
output_dir: /abs/out
)",
                                         base);
    CHECK(c.dataset_path == base / "data/x.csv");
    CHECK(c.schema.time_column == "days");
    CHECK(c.schema.feature_columns == std::vector<std::string>{"a", "b"});
    CHECK(c.protocol.test_fraction == 0.25);
    CHECK(c.protocol.replicates_per_size == 20);
    CHECK(c.protocol.repetitions == 10);
    REQUIRE(c.protocol.algorithms.size() == 2);
    CHECK(c.protocol.algorithms[0].name == "lasso");
    CHECK(c.protocol.algorithms[0].path.selection.kind == Selection::Kind::CvCIndex);
    CHECK(c.protocol.algorithms[0].path.folds == 3);
    CHECK(c.protocol.algorithms[1].name == "coxph");
    CHECK(c.output_dir == "/abs/out");

    const auto bad = [&](const std::string& text) {
        CHECK_THROWS_AS(cli::parse_run_config(text, base), cli::ConfigError);
    };
    bad("dataset: {path: x.csv}\nprotocol: {training_sizes: [10]}\nalgorithms: [{kind: coxph}]\ncolour: red\n");
    bad("dataset: {path: x.csv}\nprotocol: {training_sizes: [10], replicates: 3}\nalgorithms: [{kind: coxph}]\n");
    bad("dataset: {path: x.csv}\nprotocol: {training_sizes: [10]}\nalgorithms: [{kind: forest}]\n");
    bad("dataset: {path: x.csv}\nprotocol: {training_sizes: ten}\nalgorithms: [{kind: coxph}]\n");
    bad("dataset: {}\nprotocol: {training_sizes: [10]}\nalgorithms: [{kind: coxph}]\n");
    bad("dataset: {path: x.csv}\nprotocol: {training_sizes: [10]}\nalgorithms: [{kind: coxph, folds: 3}]\n");
    bad("[unclosed");

    for (const char* name : {"pbc.conf", "synthetic.conf"}) {
        const auto bundled = cli::load_run_config(fs::path(SURVBV_SOURCE_DIR) / "experiments" / name);
        CHECK(bundled.protocol.algorithms.size() == 2);
        CHECK(bundled.protocol.training_sizes.front() == 40);
    }
    const auto pbc_conf = cli::load_run_config(fs::path(SURVBV_SOURCE_DIR) / "experiments" / "pbc.conf");
    CHECK(fs::exists(pbc_conf.dataset_path));
    CHECK(pbc_conf.protocol.training_sizes.back() == 220);
}
