#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssmgen/measure.hpp"
#include "ssmgen/seqgen.hpp"
#include "ssmgen/ssm.hpp"

namespace ssmgen {

enum class Regularizer { Tau, FilterNorm, WeightDecayA, None };

std::string regularizer_name(Regularizer r);
Regularizer regularizer_from_name(const std::string& name);

struct TrainConfig {
    double lambda_reg = 0.0;
    Regularizer regularizer = Regularizer::None;
    double lr_main = 0.01;    // C (and D) group, decoupled weight decay
    double lr_state = 0.001;  // A, B, delta group, no decay
    double weight_decay_c = 0.01;
    int epochs = 100;
    int batch_size = 0;  // 0 = full batch
    bool cosine_schedule = true;
    std::uint64_t seed = 0;

    void validate() const;
};

// Gradients in the layer's own parameterization (diagonal representation).
struct LayerGrads {
    std::vector<double> a_log_re, a_im, b_re, b_im, c_re, c_im, d_skip, delta;
    double squared_norm() const;
};

struct RiskBreakdown {
    double mse = 0.0;
    double lambda = 0.0;
    std::vector<double> penalty_per_layer;  // regularizer-dependent
    double total() const;
};

// Mean squared error of the last-position output against the labels.
double empirical_risk(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset);

// mse + lambda * sum_i penalty_i, with per-layer statistics taken from the
// current layer inputs (tau), ignored (filter_norm: mu=0, var=1), or replaced
// by ||A||^2 (weight_decay_a).
RiskBreakdown regularized_risk(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset,
                               const TrainConfig& config);

struct GradResult {
    RiskBreakdown risk;
    std::vector<LayerGrads> grads;
};

// Exact gradients of the regularized risk for diagonal-parameterization
// models. Statistics inside the measure penalty are treated as constants
// (they are data in the per-layer recipe, not functions of the parameters);
// |.| uses the sign subgradient with sign(0) = 0.
GradResult gradients(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset,
                     const TrainConfig& config);

struct EpochRecord {
    int epoch = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double tau_total = 0.0;
    double grad_norm = 0.0;
    double lr = 0.0;  // current main-group learning rate after the schedule
};

struct AdamSlot {
    std::vector<double> m1, m2;
};

struct LayerMoments {
    AdamSlot a_log_re, a_im, b_re, b_im, c_re, c_im, d_skip, delta;
};

struct TrainState {
    std::vector<SSMLayerParams> model;
    std::vector<LayerMoments> moments;
    int epoch = 0;
    std::vector<EpochRecord> history;
    bool diverged = false;
};

using EpochCallback = std::function<void(const TrainState&)>;

// Epoch loop: one sampled minibatch and one adaptive-moment update per epoch
// (full batch by default), bias-corrected moments, decoupled weight decay on
// the C/D group only, optional cosine schedule on both groups. Deterministic
// given config.seed. On a non-finite loss or gradient the loop stops with
// diverged=true and the last finite state preserved.
TrainState train(const SequenceDataset& train_set, const SequenceDataset& test_set, const TrainConfig& config,
                 std::vector<SSMLayerParams> model, const EpochCallback& on_epoch = nullptr);

}  // namespace ssmgen
