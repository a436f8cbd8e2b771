#pragma once

#include <vector>

#include "ssmgen/common.hpp"

namespace ssmgen {

// In-place radix-2 FFT; n must be a power of two. inverse=true applies the
// conjugate transform and the 1/n normalization.
void fft_inplace(std::vector<Complex>& a, bool inverse);

// Causal convolution out[t] = sum_{j<=t} k[j] * x[t-j], t = 0..length-1,
// via zero-padded FFT of size next_pow2(2*length).
std::vector<double> conv_causal_fft(const std::vector<double>& k, const std::vector<double>& x);

// Causal correlation out[j] = sum_{t>=j} a[t] * b[t-j], j = 0..length-1.
// This is the adjoint of conv_causal_fft in either argument.
std::vector<double> correlate_causal_fft(const std::vector<double>& a, const std::vector<double>& b);

// Plans reuse: transform of a fixed real signal, for repeated convolutions
// against changing kernels (training loop caches these per sequence).
struct RealSpectrum {
    int length = 0;   // original signal length
    int nfft = 0;
    std::vector<double> re, im;
};

RealSpectrum forward_spectrum(const double* x, int length, int nfft);
// y[t] = sum_{j<=t} k[j] x[t-j] given the precomputed spectrum of x.
std::vector<double> conv_causal_with_spectrum(const std::vector<double>& k, const RealSpectrum& xs);

}  // namespace ssmgen
