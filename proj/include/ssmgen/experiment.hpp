#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "ssmgen/init.hpp"
#include "ssmgen/seqgen.hpp"
#include "ssmgen/train.hpp"

namespace ssmgen {

// Versioned CSV headers; golden tests pin these strings.
namespace schema {
inline constexpr int kVersion = 1;
inline constexpr const char* kMatrixResults = "b,arm,seed,train_mse,test_mse,psi_sq_over_sqrt_n,diverged";
inline constexpr const char* kMatrixSummary =
    "b,arm,n_seeds,train_mse_mean,train_mse_stderr,test_mse_mean,test_mse_stderr,psi_mean,psi_stderr";
inline constexpr const char* kProp1 = "b,L,rescaled,mean_abs_output";
inline constexpr const char* kPadding = "T,left_measure,right_measure";
inline constexpr const char* kTransfer = "factor,output_max_dev,measure_rel_dev";
inline constexpr const char* kMetrics = "epoch,train_mse,test_mse,tau_total,grad_norm,lr";
}  // namespace schema

enum class Arm { Baseline, RescaleOnly, RegOnly, RescaleAndReg };

std::string arm_name(Arm arm);
Arm arm_from_name(const std::string& name);

struct ExperimentPlan {
    std::vector<double> b_values{1.0, 0.1, 0.01};
    std::vector<Arm> arms{Arm::Baseline, Arm::RescaleOnly, Arm::RegOnly, Arm::RescaleAndReg};
    int repeats = 3;
    std::vector<int> lengths;  // output-scale sweep lengths

    std::string profile = "paper";
    int n_train = 100;
    int n_test = 1000;
    int m = 64;
    int length = 1000;
    int epochs = 100;
    int sweep_m = 64;       // state dimension for the output-scale sweep
    int sweep_batch = 200;  // sequences per estimate in the sweep
    double lambda = 0.01;
    InitKind init_kind = InitKind::LegsDiag;
    double delta_min = 1e-3;
    double delta_max = 1e-1;
    double lr_main = 0.01;
    double lr_state = 0.001;
    double weight_decay_c = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

// Profile presets: "paper" mirrors the synthetic study's settings verbatim;
// "fast" is the desk-scale profile (L=128, m=16, 50 epochs).
ExperimentPlan make_plan(const std::string& profile);

nlohmann::json plan_to_json(const ExperimentPlan& plan);
void apply_plan_overrides(ExperimentPlan& plan, const nlohmann::json& j);

struct CellResult {
    double b = 0.0;
    Arm arm = Arm::Baseline;
    std::uint64_t seed = 0;  // per-cell seed (derived from plan seed)
    double train_mse = 0.0;
    double test_mse = 0.0;
    double psi_sq_over_sqrt_n = 0.0;
    bool diverged = false;
};

struct MatrixResult {
    std::vector<CellResult> cells;
};

MatrixResult run_matrix(const ExperimentPlan& plan);

struct SummaryRow {
    double b = 0.0;
    Arm arm = Arm::Baseline;
    int n_seeds = 0;
    double train_mean = 0.0, train_stderr = 0.0;
    double test_mean = 0.0, test_stderr = 0.0;
    double psi_mean = 0.0, psi_stderr = 0.0;
};

std::vector<SummaryRow> summarize(const MatrixResult& result);

struct Prop1Row {
    double b = 0.0;
    int length = 0;
    bool rescaled = false;
    double mean_abs_output = 0.0;
};

// Mean |y_L| at initialization over a fresh batch, for each (b, L), with and
// without the measure-normalizing rescale (rescale recomputed per length).
std::vector<Prop1Row> prop1_sweep(const ExperimentPlan& plan);

struct PaddingRow {
    double horizon = 0.0;
    double left = 0.0;
    double right = 0.0;
};

std::vector<PaddingRow> padding_demo(const SSMLayerParams& params, const ProcessSpec& process,
                                     const std::vector<double>& horizons);

struct TransferReport {
    double factor = 2.0;
    double output_max_dev = 0.0;
    double measure_rel_dev = 0.0;
};

TransferReport transfer_demo(const SSMLayerParams& params, const ProcessSpec& process, double factor);

// CSV/JSON writers. Every output directory gets a meta.json embedding the
// schema version, the full plan, its hash, and the derived seed table.
void write_matrix_outputs(const MatrixResult& result, const ExperimentPlan& plan, const std::string& out_dir);
void write_prop1_outputs(const std::vector<Prop1Row>& rows, const ExperimentPlan& plan, const std::string& out_dir);
void write_padding_outputs(const std::vector<PaddingRow>& rows, const nlohmann::json& config,
                           const std::string& out_dir);
void write_transfer_outputs(const TransferReport& report, const nlohmann::json& config, const std::string& out_dir);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

MatrixResult read_matrix_results(const std::string& csv_path);

std::string format_double(double v);

}  // namespace ssmgen
