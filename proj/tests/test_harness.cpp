#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ssmgen/cli.hpp"
#include "ssmgen/experiment.hpp"
#include "ssmgen/serialize.hpp"

using namespace ssmgen;

namespace {

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("ssmgen");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& name) : path("/tmp/ssmgen_" + name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("profiles pin the documented defaults") {
    const auto paper = make_plan("paper");
    CHECK(paper.n_train == 100);
    CHECK(paper.n_test == 1000);
    CHECK(paper.m == 64);
    CHECK(paper.length == 1000);
    CHECK(paper.epochs == 100);
    CHECK(paper.lambda == 0.01);
    CHECK(paper.b_values == std::vector<double>{1.0, 0.1, 0.01});
    CHECK(paper.repeats == 3);

    const auto fast = make_plan("fast");
    CHECK(fast.length == 128);
    CHECK(fast.m == 16);
    CHECK(fast.epochs == 50);
    CHECK_THROWS(make_plan("warp"));
}

TEST_CASE("csv schemas are pinned") {
    CHECK(std::string(schema::kMatrixResults) ==
          "b,arm,seed,train_mse,test_mse,psi_sq_over_sqrt_n,diverged");
    CHECK(std::string(schema::kMatrixSummary) ==
          "b,arm,n_seeds,train_mse_mean,train_mse_stderr,test_mse_mean,test_mse_stderr,psi_mean,psi_stderr");
    CHECK(std::string(schema::kProp1) == "b,L,rescaled,mean_abs_output");
    CHECK(std::string(schema::kPadding) == "T,left_measure,right_measure");
    CHECK(std::string(schema::kTransfer) == "factor,output_max_dev,measure_rel_dev");
    CHECK(std::string(schema::kMetrics) == "epoch,train_mse,test_mse,tau_total,grad_norm,lr");
}

TEST_CASE("single-seed summaries report zero stderr") {
    MatrixResult result;
    result.cells.push_back({1.0, Arm::Baseline, 7, 0.5, 0.7, 0.2, false});
    const auto rows = summarize(result);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n_seeds == 1);
    CHECK(rows[0].train_stderr == 0.0);
    CHECK(rows[0].test_mean == 0.7);
}

TEST_CASE("padding table: row count, decreasing right column, stable left column") {
    SSMLayerParams scalar;
    scalar.repr = Repr::Diag;
    scalar.m = 1;
    scalar.d = 1;
    scalar.a_log_re = {0.0};
    scalar.a_im = {0.0};
    scalar.b_re = {1.0};
    scalar.b_im = {0.0};
    scalar.c_re = {1.0};
    scalar.c_im = {0.0};
    scalar.delta = {0.01};

    ProcessSpec process;
    process.kind = ProcessKind::GaussianWhiteNoise;
    process.bandwidth = 1.0;
    process.mean = 1.0;
    process.length = 1;

    const std::vector<double> horizons{5.0, 10.0, 20.0, 40.0};
    const auto rows = padding_demo(scalar, process, horizons);
    REQUIRE(rows.size() == horizons.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].right < rows[i - 1].right);
        // left column is the un-padded measure; for this stationary process
        // it is constant in T up to the exp(-T) kernel tail
        CHECK(rows[i].left == doctest::Approx(rows[i - 1].left).epsilon(1e-2));
    }
    CHECK(rows.back().right == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("transfer demo at factor 1 reports zero deviation") {
    auto params = oracle::random_diag_params(42, 4);
    params.delta = {1e-3};
    ProcessSpec process;
    process.kind = ProcessKind::GaussianWhiteNoise;
    process.bandwidth = 1.0;
    process.mean = 1.0;
    process.length = 1;
    const auto report = transfer_demo(params, process, 1.0);
    CHECK(report.output_max_dev == 0.0);
    CHECK(report.measure_rel_dev == 0.0);
}

TEST_CASE("matrix outputs round trip and stay byte-identical across runs") {
    ExperimentPlan plan = make_plan("fast");
    plan.b_values = {1.0};
    plan.arms = {Arm::Baseline};
    plan.repeats = 2;
    plan.length = 16;
    plan.m = 4;
    plan.epochs = 3;
    plan.n_train = 12;
    plan.n_test = 20;
    plan.seed = 5;

    const MatrixResult result = run_matrix(plan);
    REQUIRE(result.cells.size() == 2);
    for (const auto& cell : result.cells) CHECK(!cell.diverged);

    TempDir a("matrix_a"), b("matrix_b");
    write_matrix_outputs(result, plan, a.path);
    const MatrixResult again = run_matrix(plan);
    write_matrix_outputs(again, plan, b.path);
    CHECK(read_file(a.path + "/results.csv") == read_file(b.path + "/results.csv"));
    CHECK(read_file(a.path + "/summary.csv") == read_file(b.path + "/summary.csv"));
    CHECK(read_file(a.path + "/meta.json") == read_file(b.path + "/meta.json"));

    const MatrixResult loaded = read_matrix_results(a.path + "/results.csv");
    REQUIRE(loaded.cells.size() == result.cells.size());
    CHECK(loaded.cells[0].train_mse == result.cells[0].train_mse);
    CHECK(loaded.cells[1].seed == result.cells[1].seed);
}

TEST_CASE("output-scale sweep handles the degenerate length-1 case") {
    ExperimentPlan plan = make_plan("fast");
    plan.b_values = {1.0};
    plan.lengths = {1, 2, 8};
    plan.sweep_m = 4;
    plan.sweep_batch = 16;
    plan.seed = 11;
    const auto rows = prop1_sweep(plan);
    REQUIRE(rows.size() == 6);  // (raw, rescaled) per length
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.mean_abs_output));
        CHECK(r.mean_abs_output >= 0.0);
    }
}

TEST_CASE("cli: generate, measure, rescale, train, report") {
    TempDir root("cli");
    const std::string data_dir = root.path + "/data";
    const std::string test_dir = root.path + "/test";

    // config shared by the steps
    const std::string cfg_path = root.path + "/config.json";
    write_file(cfg_path, R"({
      "process": {"kind": "gaussian_white_noise", "b": 1.0, "mean": 1.0, "length": 16, "dim": 1, "seed": 3},
      "model": {"kind": "legs_diag", "m": 4, "seed": 4},
      "train": {"lambda": 0.01, "regularizer": "tau", "epochs": 3, "seed": 5}
    })");

    CHECK(run_cli({"--config", cfg_path, "--out", data_dir, "generate", "-n", "10"}) == 0);
    CHECK(std::filesystem::exists(data_dir + "/meta.json"));
    CHECK(std::filesystem::exists(data_dir + "/data.csv"));

    CHECK(run_cli({"--config", cfg_path, "--seed", "99", "--out", test_dir, "generate", "-n", "8"}) == 0);

    // byte-identical regeneration
    const std::string data_dir2 = root.path + "/data2";
    CHECK(run_cli({"--config", cfg_path, "--out", data_dir2, "generate", "-n", "10"}) == 0);
    CHECK(read_file(data_dir + "/data.csv") == read_file(data_dir2 + "/data.csv"));

    // initial model for measure/rescale
    const std::string model_path = root.path + "/model.json";
    InitConfig init;
    init.kind = InitKind::LegsDiag;
    init.m = 4;
    init.seed = 4;
    save_model(init_hippo(init), model_path);

    const std::string measure_dir = root.path + "/measure";
    CHECK(run_cli({"--out", measure_dir, "measure", "--model", model_path, "--data", data_dir}) == 0);
    const auto report = nlohmann::json::parse(read_file(measure_dir + "/measure.json"));
    CHECK(report.at("n").get<int>() == 10);
    CHECK(report.at("tau_total").get<double>() > 0.0);

    const std::string rescale_dir = root.path + "/rescaled";
    CHECK(run_cli({"--out", rescale_dir, "rescale", "--model", model_path, "--data", data_dir}) == 0);
    const std::string measure2_dir = root.path + "/measure2";
    CHECK(run_cli({"--out", measure2_dir, "measure", "--model", rescale_dir + "/model.json", "--data",
                   data_dir}) == 0);
    const auto report2 = nlohmann::json::parse(read_file(measure2_dir + "/measure.json"));
    CHECK(report2.at("tau_total").get<double>() == doctest::Approx(1.0).epsilon(1e-9));

    const std::string train_dir = root.path + "/run";
    CHECK(run_cli({"--config", cfg_path, "--out", train_dir, "train", "--data", data_dir, "--test", test_dir,
                   "--checkpoint-every", "2"}) == 0);
    const std::string metrics = read_file(train_dir + "/metrics.csv");
    CHECK(metrics.rfind(std::string(schema::kMetrics) + "\n", 0) == 0);
    CHECK(std::filesystem::exists(train_dir + "/model.json"));
    CHECK(std::filesystem::exists(train_dir + "/checkpoint_2.json"));
    const auto result = nlohmann::json::parse(read_file(train_dir + "/result.json"));
    CHECK(result.at("diverged").get<bool>() == false);
    CHECK(result.at("epochs_run").get<int>() == 3);

    // training twice is byte-identical
    const std::string train_dir2 = root.path + "/run2";
    CHECK(run_cli({"--config", cfg_path, "--out", train_dir2, "train", "--data", data_dir, "--test",
                   test_dir}) == 0);
    const std::string train_dir3 = root.path + "/run3";
    CHECK(run_cli({"--config", cfg_path, "--out", train_dir3, "train", "--data", data_dir, "--test",
                   test_dir}) == 0);
    CHECK(read_file(train_dir2 + "/metrics.csv") == read_file(train_dir3 + "/metrics.csv"));
    CHECK(read_file(train_dir2 + "/model.json") == read_file(train_dir3 + "/model.json"));

    // usage errors exit with 1
    CHECK(run_cli({"measure", "--model", model_path}) == 1);
    CHECK(run_cli({"frobnicate"}) == 1);
}

TEST_CASE("cli padding and transfer emit their tables") {
    TempDir root("cli_demo");
    const std::string pad_dir = root.path + "/pad";
    CHECK(run_cli({"--out", pad_dir, "padding"}) == 0);
    const std::string pad_csv = read_file(pad_dir + "/padding.csv");
    CHECK(pad_csv.rfind(std::string(schema::kPadding) + "\n", 0) == 0);
    // header + 4 default horizons
    CHECK(std::count(pad_csv.begin(), pad_csv.end(), '\n') == 5);

    const std::string tr_dir = root.path + "/tr";
    CHECK(run_cli({"--seed", "2", "--out", tr_dir, "transfer", "--factor", "1"}) == 0);
    const std::string tr_csv = read_file(tr_dir + "/transfer.csv");
    CHECK(tr_csv.rfind(std::string(schema::kTransfer) + "\n", 0) == 0);
}

TEST_CASE("paper-profile baseline cell lands near the reference numbers") {
    // b = 1 baseline at the full synthetic settings: train ~0.15, test ~0.25,
    // checked within a 2x band (values depend on the random stream)
    ExperimentPlan plan = make_plan("paper");
    plan.b_values = {1.0};
    plan.arms = {Arm::Baseline};
    plan.seed = 0;
    const auto rows = summarize(run_matrix(plan));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].train_mean > 0.075);
    CHECK(rows[0].train_mean < 0.30);
    CHECK(rows[0].test_mean > 0.125);
    CHECK(rows[0].test_mean < 0.50);
    // final training error within the reported band
    CHECK(std::fabs(rows[0].train_mean - 0.15) < 0.05);
}

TEST_CASE("cli report aggregates a results file") {
    TempDir root("cli_report");
    const std::string results = root.path + "/results.csv";
    write_file(results, std::string(schema::kMatrixResults) +
                            "\n1,baseline,7,0.5,0.7,0.2,0\n1,baseline,8,0.7,0.9,0.4,0\n");
    CHECK(run_cli({"--out", root.path, "report", "--in", results}) == 0);
    const std::string summary = read_file(root.path + "/summary.csv");
    CHECK(summary.rfind(std::string(schema::kMatrixSummary) + "\n", 0) == 0);
    CHECK(summary.find("0.6") != std::string::npos);  // train mean
}
