#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ssmgen/common.hpp"

namespace ssmgen {

enum class ProcessKind { GaussianWhiteNoise, OrnsteinUhlenbeck, IdenticalGaussian };

// Generative description of a stationary Gaussian training process.
// Positions are one time unit apart.
struct ProcessSpec {
    ProcessKind kind = ProcessKind::GaussianWhiteNoise;
    double bandwidth = 1.0;  // b, white noise only; must be nonzero
    double mean = 1.0;       // constant mean level (white noise); OU/identical use 0
    int length = 1;
    int dim = 1;
    std::uint64_t seed = 0;

    void validate() const;
    double mean_at(double /*t*/) const;
    // K(s,t); stationary, depends on |s-t| only.
    double covariance(double s, double t) const;
};

std::string process_kind_name(ProcessKind kind);
ProcessKind process_kind_from_name(const std::string& name);

// K[i][j] = K(i, j) for integer positions 0..L-1.
Eigen::MatrixXd covariance_matrix(const ProcessSpec& spec);

struct SequenceDataset {
    Batch inputs;
    std::vector<double> labels;
    ProcessSpec spec;
};

// Draws n sequences via the Cholesky factor of (K + jitter I); channels are
// replicated from channel 0 when dim > 1. Labels follow sin(x[floor(L/2)][0]).
// Deterministic given spec.seed; sequence i uses stream_seed(seed, i).
SequenceDataset sample_batch(const ProcessSpec& spec, int n);

double label_rule(const double* seq, int length, int dim);

std::vector<double> pad_left_zero(const std::vector<double>& x);
std::vector<double> pad_right_zero(const std::vector<double>& x);

// On-disk layout: <dir>/meta.json (spec, n, label rule) and <dir>/data.csv
// (header row, then one row per sequence: L*d input floats followed by label).
void save_dataset(const SequenceDataset& ds, const std::string& dir);
SequenceDataset load_dataset(const std::string& dir);

std::uint64_t dataset_hash(const SequenceDataset& ds);

}  // namespace ssmgen
