#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ssmgen/common.hpp"

namespace ssmgen {

enum class Repr { Diag, Full };

// One SSM layer: state matrix A (complex diagonal or full real), input map B,
// per-channel output maps C, optional skip weight D, per-channel timescale.
//
// Diagonal A is stored in the exponential parameterization
//   lambda[n] = -exp(a_log_re[n]) + i * a_im[n]
// which keeps every eigenvalue's real part strictly negative under
// unconstrained gradient updates.
struct SSMLayerParams {
    Repr repr = Repr::Diag;
    int m = 0;
    int d = 1;

    std::vector<double> a_log_re, a_im;  // size m (diag only)
    Eigen::MatrixXd a_full;              // m x m (full only)
    std::vector<double> b_re, b_im;      // size m (b_im zero for full)
    std::vector<double> c_re, c_im;      // d x m row-major (c_im zero for full)
    std::vector<double> d_skip;          // size d, empty when D = 0
    std::vector<double> delta;           // size d, strictly positive

    bool has_skip() const { return !d_skip.empty(); }
    Complex lambda(int n) const { return {-std::exp(a_log_re[n]), a_im[n]}; }
    Complex b(int n) const { return {b_re[n], b_im[n]}; }
    Complex c(int ch, int n) const {
        return {c_re[static_cast<std::size_t>(ch) * m + n], c_im[static_cast<std::size_t>(ch) * m + n]};
    }

    // Shape/finiteness/invariant checks; throws std::invalid_argument.
    void validate() const;
};

// ZOH discretization: Abar = exp(delta*A), Bbar = (Abar - I) A^{-1} B, Cbar = C.
// One (Abar, Bbar) pair per channel since delta is per channel.
struct DiscreteSystem {
    Repr repr = Repr::Diag;
    int m = 0;
    int d = 1;
    // diag: d x m row-major
    std::vector<Complex> abar;
    std::vector<Complex> bbar;
    // full: one matrix/vector per channel
    std::vector<Eigen::MatrixXd> abar_full;
    std::vector<Eigen::VectorXd> bbar_full;
};

DiscreteSystem discretize_zoh(const SSMLayerParams& params);

// Length-L convolution kernel, taps[pos][ch] row-major, taps[j] = Re(Cbar Abar^j Bbar).
struct DiscreteKernel {
    int length = 0;
    int d = 1;
    std::vector<double> values;  // L x d row-major

    double at(int pos, int ch) const { return values[static_cast<std::size_t>(pos) * d + ch]; }
    std::vector<double> channel(int ch) const;
};

DiscreteKernel compute_kernel(const SSMLayerParams& params, int length);

// Causal convolution of x (L x d row-major) with the layer kernel, channelwise,
// plus d_skip * x when a skip weight is present. FFT path, next_pow2(2L).
std::vector<double> forward(const SSMLayerParams& params, const std::vector<double>& x, int length);

Batch forward_batch(const SSMLayerParams& params, const Batch& input);

// rho(s) = Re(C e^{A s} B) for one channel.
double continuous_kernel(const SSMLayerParams& params, double s, int ch = 0);

// rho on the uniform grid t0 + i*h, i = 0..count-1 (used by quadrature).
std::vector<double> continuous_kernel_grid(const SSMLayerParams& params, int ch, double t0, double h, int count);

// C scaled in place by a real factor, channel by channel or globally.
void scale_c(SSMLayerParams& params, double factor);
void scale_c_channel(SSMLayerParams& params, int ch, double factor);

}  // namespace ssmgen
