#pragma once

#include <functional>
#include <json.hpp>
#include <utility>
#include <vector>

#include "ssmgen/common.hpp"
#include "ssmgen/seqgen.hpp"
#include "ssmgen/ssm.hpp"

namespace ssmgen {

// Per-position, per-feature empirical moments along the batch dimension.
struct SequenceStats {
    int length = 0;
    int d = 1;
    std::vector<double> mu;   // L x d row-major
    std::vector<double> var;  // L x d row-major, population (1/n) normalization

    double mu_at(int pos, int ch) const { return mu[static_cast<std::size_t>(pos) * d + ch]; }
    double var_at(int pos, int ch) const { return var[static_cast<std::size_t>(pos) * d + ch]; }
};

SequenceStats compute_stats(const Batch& batch);

// Discrete sequence-complexity measure. Per channel
//   t[ch] = sum_j |k_j| * sqrt(var[L-1-j]) + | sum_j k_j * mu[L-1-j] |
// (the last position of the two causal convolutions), and the measure is
// (sum_ch t[ch]^2) / d.
struct MeasureParts {
    double tau = 0.0;
    std::vector<double> abs_term;   // per channel, sum_j |k_j| sigma_rev[j]
    std::vector<double> mean_term;  // per channel, signed sum_j k_j mu_rev[j]
};

MeasureParts discrete_measure_parts(const DiscreteKernel& kernel, const SequenceStats& stats);
double discrete_measure(const DiscreteKernel& kernel, const SequenceStats& stats);

using ScalarFn = std::function<double(double)>;

// Continuous measure
//   ( int_0^T |rho(T-s)| sqrt(K(s,s)) ds + | int_0^T rho(T-s) mu(s) ds | )^2
// by composite Simpson quadrature, 4096 panels doubling until successive
// estimates agree to 1e-8 relative. For d > 1 channels are combined the same
// way as the discrete measure.
double continuous_measure(const SSMLayerParams& params, const ScalarFn& mean_fn, const ScalarFn& var_fn,
                          double horizon);

// Key bound terms (each "+1") for the two zero-padding transformations of a
// length-T process padded to 2T. Left padding reduces to the original
// integral; right padding carries the extra e^{AT} decay inside the kernel.
std::pair<double, double> padding_measures(const SSMLayerParams& params, const ScalarFn& mean_fn,
                                           const ScalarFn& var_fn, double horizon);

// Sampling-frequency transfer: the model that computes the same outputs on
// inputs subsampled by `factor`, with the measure invariant. C picks up the
// factor; the kernel clock scales with it (A scaled, so the discrete
// realization behaves as if delta were scaled by the factor).
SSMLayerParams transfer_params(const SSMLayerParams& params, double factor);

// Per-layer measures with inputs propagated through the model
// (layer i sees the outputs of layers 1..i-1). Optional outputs collect the
// per-layer input batches and stats for reuse.
std::vector<double> layer_measures(const std::vector<SSMLayerParams>& model, const Batch& batch,
                                   std::vector<SequenceStats>* stats_out = nullptr,
                                   std::vector<Batch>* inputs_out = nullptr);

struct MeasureReport {
    std::vector<double> tau_per_layer;
    double tau_total = 0.0;
    double psi_sq_over_sqrt_n = 0.0;
    int n = 0;
    std::uint64_t model_hash = 0;
    std::uint64_t dataset_hash = 0;
};

MeasureReport measure_report(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset);
nlohmann::json report_to_json(const MeasureReport& report);

}  // namespace ssmgen
