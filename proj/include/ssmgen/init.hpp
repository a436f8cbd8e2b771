#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssmgen/measure.hpp"
#include "ssmgen/ssm.hpp"

namespace ssmgen {

enum class InitKind { LegsFull, LegsDiag };

struct InitConfig {
    InitKind kind = InitKind::LegsDiag;
    int m = 0;
    int d = 1;
    int layers = 1;
    // delta drawn log-uniform in [delta_min, delta_max], per channel
    double delta_min = 1e-3;
    double delta_max = 1e-1;
    std::uint64_t seed = 0;

    void validate() const;
};

std::string init_kind_name(InitKind kind);
InitKind init_kind_from_name(const std::string& name);

// HiPPO-style initialization. legs_full builds the LegS state matrix
//   A[n][k] = -sqrt(2n+1) sqrt(2k+1)  (n > k),  -(n+1)  (n = k),  0  (n < k)
// with B[n] = sqrt(2n+1); legs_diag uses the diagonal approximation
// lambda[n] = -1/2 + i*pi*n with B[n] = 1. C entries are i.i.d. standard
// normal. Deterministic given the seed (layer i uses stream_seed(seed, i)).
std::vector<SSMLayerParams> init_hippo(const InitConfig& config);

// C scaled by 1/sqrt(tau); throws "degenerate measure" for tau <= 0.
SSMLayerParams rescale_c(const SSMLayerParams& params, double tau);

// Variant for layers with a skip weight: C scaled by 1/sqrt(tau_conv) and D
// by 1/sqrt(tau_skip), where tau_skip is the delta-kernel contribution.
SSMLayerParams rescale_with_skip(const SSMLayerParams& params, double tau_conv, double tau_skip);

// Skip-weight contribution (|D| sqrt(var[L-1]) + |D mu[L-1]|)^2 averaged over
// channels. Zero when no skip is present.
double skip_measure(const SSMLayerParams& params, const SequenceStats& stats);

struct RescaleResult {
    std::vector<SSMLayerParams> model;
    std::vector<double> tau_trace;  // per-layer measures before rescaling
};

// Sequential per-layer measure normalization: layer i's inputs are obtained
// by forwarding the minibatch through the already-rescaled layers 1..i-1.
// A layer whose measure falls below 1e-12 is left unscaled (degenerate:
// all-zero statistics or a dead kernel) and a warning is printed.
RescaleResult rescale_all_layers(const std::vector<SSMLayerParams>& model, const Batch& minibatch);

}  // namespace ssmgen
