#pragma once

// Test-only reference implementations, independent of the library's
// computation paths. These are the oracles the main code is checked against.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "ssmgen/ssm.hpp"

namespace oracle {

using ssmgen::Complex;

// Plain Taylor-series matrix exponential at reduced norm (scaling by 2^-s,
// 30-term Taylor, square s times).
inline Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    while ((norm / (1 << s)) > 0.5) ++s;
    const Eigen::MatrixXd scaled = a / (1 << s);
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = result;
    for (int k = 1; k <= 30; ++k) {
        term = term * scaled / k;
        result += term;
    }
    for (int i = 0; i < s; ++i) result = result * result;
    return result;
}

// Scalar Taylor exponential for complex arguments (same scheme).
inline Complex taylor_exp(Complex z) {
    int s = 0;
    while (std::abs(z) / (1 << s) > 0.5) ++s;
    const Complex scaled = z / static_cast<double>(1 << s);
    Complex result(1.0, 0.0), term(1.0, 0.0);
    for (int k = 1; k <= 30; ++k) {
        term *= scaled / static_cast<double>(k);
        result += term;
    }
    for (int i = 0; i < s; ++i) result *= result;
    return result;
}

// Direct O(L^2) causal convolution.
inline std::vector<double> direct_conv(const std::vector<double>& k, const std::vector<double>& x) {
    const int L = static_cast<int>(x.size());
    std::vector<double> y(L, 0.0);
    for (int t = 0; t < L; ++t)
        for (int j = 0; j <= t; ++j) y[t] += k[j] * x[t - j];
    return y;
}

// Dense-matrix kernel for a diagonal model: builds the full complex diagonal
// matrix and iterates matrix-vector products.
inline std::vector<double> dense_power_kernel(const ssmgen::SSMLayerParams& params, int length, int ch) {
    using CMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
    using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
    const int m = params.m;
    const double dt = params.delta[ch];
    CMat abar = CMat::Zero(m, m);
    CVec bbar(m), c(m);
    for (int n = 0; n < m; ++n) {
        const Complex lam = params.lambda(n);
        const Complex z = std::exp(lam * dt);
        abar(n, n) = z;
        bbar[n] = (z - 1.0) / lam * params.b(n);
        c[n] = params.c(ch, n);
    }
    std::vector<double> taps(length);
    CVec u = bbar;
    for (int j = 0; j < length; ++j) {
        Complex acc(0.0, 0.0);
        for (int n = 0; n < m; ++n) acc += c[n] * u[n];
        taps[j] = acc.real();
        if (j + 1 < length) u = abar * u;
    }
    return taps;
}

// Explicit double-sum evaluation of the discrete measure:
//   per channel t = sum_j |k_j| sqrt(var[L-1-j]) + |sum_j k_j mu[L-1-j]|,
//   measure = sum_ch t^2 / d, written as the last element of the two causal
//   convolution arrays, formed index by index.
inline double double_sum_measure(const std::vector<double>& taps, int length, int d,
                                 const std::vector<double>& mu, const std::vector<double>& var) {
    double acc = 0.0;
    for (int ch = 0; ch < d; ++ch) {
        std::vector<double> conv_abs(length, 0.0), conv_mu(length, 0.0);
        for (int t = 0; t < length; ++t) {
            for (int j = 0; j <= t; ++j) {
                const double k = taps[static_cast<std::size_t>(j) * d + ch];
                conv_abs[t] += std::fabs(k) * std::sqrt(var[static_cast<std::size_t>(t - j) * d + ch]);
                conv_mu[t] += k * mu[static_cast<std::size_t>(t - j) * d + ch];
            }
        }
        const double t_ch = conv_abs[length - 1] + std::fabs(conv_mu[length - 1]);
        acc += t_ch * t_ch;
    }
    return acc / d;
}

// Central finite differences of a scalar function over a parameter vector.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> theta, double step) {
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + step;
        const double fp = f(theta);
        theta[i] = saved - step;
        const double fm = f(theta);
        theta[i] = saved;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

// Random diagonal-parameterization layer for property tests.
inline ssmgen::SSMLayerParams random_diag_params(std::uint64_t seed, int m, int d = 1, bool with_skip = false) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ssmgen::SSMLayerParams p;
    p.repr = ssmgen::Repr::Diag;
    p.m = m;
    p.d = d;
    p.a_log_re.resize(m);
    p.a_im.resize(m);
    p.b_re.resize(m);
    p.b_im.resize(m);
    for (int n = 0; n < m; ++n) {
        p.a_log_re[n] = -1.0 + normal(engine) * 0.5;
        p.a_im[n] = normal(engine) * 3.0;
        p.b_re[n] = normal(engine);
        p.b_im[n] = normal(engine);
    }
    p.c_re.resize(static_cast<std::size_t>(d) * m);
    p.c_im.resize(p.c_re.size());
    for (auto& v : p.c_re) v = normal(engine);
    for (auto& v : p.c_im) v = normal(engine);
    if (with_skip) {
        p.d_skip.resize(d);
        for (auto& v : p.d_skip) v = normal(engine);
    }
    p.delta.resize(d);
    for (auto& v : p.delta) v = std::exp(std::log(1e-2) + unif(engine) * (std::log(0.5) - std::log(1e-2)));
    return p;
}

}  // namespace oracle
