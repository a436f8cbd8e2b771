#include "ssmgen/ssm.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

#include "ssmgen/fft.hpp"
#include "ssmgen/kern.hpp"

namespace ssmgen {
namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

void SSMLayerParams::validate() const {
    if (m <= 0 || d <= 0) throw std::invalid_argument("state and feature dimensions must be positive");
    const auto sm = static_cast<std::size_t>(m);
    const auto sdm = static_cast<std::size_t>(d) * m;
    if (repr == Repr::Diag) {
        if (a_log_re.size() != sm || a_im.size() != sm) throw std::invalid_argument("diagonal A has wrong size");
    } else {
        if (a_full.rows() != m || a_full.cols() != m) throw std::invalid_argument("full A has wrong shape");
        if (!a_full.allFinite()) throw std::invalid_argument("full A has non-finite entries");
        // strict stability: every eigenvalue real part < 0
        Eigen::EigenSolver<Eigen::MatrixXd> es(a_full, /*computeEigenvectors=*/false);
        if (es.eigenvalues().real().maxCoeff() >= 0.0)
            throw std::invalid_argument("state matrix has an eigenvalue with non-negative real part");
    }
    if (b_re.size() != sm || b_im.size() != sm) throw std::invalid_argument("B has wrong size");
    if (c_re.size() != sdm || c_im.size() != sdm) throw std::invalid_argument("C has wrong shape");
    if (!d_skip.empty() && d_skip.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("d_skip has wrong size");
    if (delta.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("delta has wrong size");
    for (double dt : delta)
        if (!(dt > 0.0)) throw std::invalid_argument("delta must be strictly positive");
    if (!all_finite(a_log_re) || !all_finite(a_im) || !all_finite(b_re) || !all_finite(b_im) ||
        !all_finite(c_re) || !all_finite(c_im) || !all_finite(d_skip) || !all_finite(delta))
        throw std::invalid_argument("parameters contain non-finite values");
}

DiscreteSystem discretize_zoh(const SSMLayerParams& params) {
    params.validate();
    DiscreteSystem sys;
    sys.repr = params.repr;
    sys.m = params.m;
    sys.d = params.d;

    if (params.repr == Repr::Diag) {
        sys.abar.resize(static_cast<std::size_t>(params.d) * params.m);
        sys.bbar.resize(sys.abar.size());
        for (int ch = 0; ch < params.d; ++ch) {
            const double dt = params.delta[ch];
            for (int n = 0; n < params.m; ++n) {
                const Complex lam = params.lambda(n);
                if (std::abs(lam) < 1e-300) throw std::domain_error("non-invertible state matrix");
                const Complex z = std::exp(lam * dt);
                sys.abar[static_cast<std::size_t>(ch) * params.m + n] = z;
                sys.bbar[static_cast<std::size_t>(ch) * params.m + n] = (z - 1.0) / lam * params.b(n);
            }
        }
    } else {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(params.a_full);
        // stability invariant already guarantees invertibility; guard anyway
        Eigen::FullPivLU<Eigen::MatrixXd> guard(params.a_full);
        if (!guard.isInvertible()) throw std::domain_error("non-invertible state matrix");
        Eigen::VectorXd b(params.m);
        for (int n = 0; n < params.m; ++n) b[n] = params.b_re[n];
        const Eigen::VectorXd ainv_b = lu.solve(b);
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(params.m, params.m);
        sys.abar_full.reserve(params.d);
        sys.bbar_full.reserve(params.d);
        for (int ch = 0; ch < params.d; ++ch) {
            Eigen::MatrixXd abar = (params.delta[ch] * params.a_full).exp();
            sys.bbar_full.push_back((abar - eye) * ainv_b);
            sys.abar_full.push_back(std::move(abar));
        }
    }
    return sys;
}

std::vector<double> DiscreteKernel::channel(int ch) const {
    std::vector<double> out(length);
    for (int j = 0; j < length; ++j) out[j] = values[static_cast<std::size_t>(j) * d + ch];
    return out;
}

DiscreteKernel compute_kernel(const SSMLayerParams& params, int length) {
    if (length < 1) throw std::invalid_argument("kernel length must be >= 1");
    const DiscreteSystem sys = discretize_zoh(params);
    DiscreteKernel kernel;
    kernel.length = length;
    kernel.d = params.d;
    kernel.values.resize(static_cast<std::size_t>(length) * params.d);

    if (params.repr == Repr::Diag) {
        std::vector<double> wr(params.m), wi(params.m), zr(params.m), zi(params.m), taps(length);
        for (int ch = 0; ch < params.d; ++ch) {
            for (int n = 0; n < params.m; ++n) {
                const Complex w = params.c(ch, n) * sys.bbar[static_cast<std::size_t>(ch) * params.m + n];
                const Complex z = sys.abar[static_cast<std::size_t>(ch) * params.m + n];
                wr[n] = w.real();
                wi[n] = w.imag();
                zr[n] = z.real();
                zi[n] = z.imag();
            }
            kern::active().vandermonde_taps(params.m, length, wr.data(), wi.data(), zr.data(), zi.data(),
                                            taps.data());
            for (int j = 0; j < length; ++j) kernel.values[static_cast<std::size_t>(j) * params.d + ch] = taps[j];
        }
    } else {
        Eigen::VectorXd c_row(params.m);
        for (int ch = 0; ch < params.d; ++ch) {
            for (int n = 0; n < params.m; ++n) c_row[n] = params.c_re[static_cast<std::size_t>(ch) * params.m + n];
            Eigen::VectorXd u = sys.bbar_full[ch];
            for (int j = 0; j < length; ++j) {
                kernel.values[static_cast<std::size_t>(j) * params.d + ch] = c_row.dot(u);
                if (j + 1 < length) u = sys.abar_full[ch] * u;
            }
        }
    }
    for (double v : kernel.values)
        if (!std::isfinite(v)) throw std::runtime_error("kernel has non-finite entries");
    return kernel;
}

std::vector<double> forward(const SSMLayerParams& params, const std::vector<double>& x, int length) {
    if (static_cast<int>(x.size()) != length * params.d)
        throw std::invalid_argument("input length does not match requested length");
    const DiscreteKernel kernel = compute_kernel(params, length);
    std::vector<double> y(x.size(), 0.0);
    std::vector<double> xcol(length);
    for (int ch = 0; ch < params.d; ++ch) {
        for (int t = 0; t < length; ++t) xcol[t] = x[static_cast<std::size_t>(t) * params.d + ch];
        const std::vector<double> ycol = conv_causal_fft(kernel.channel(ch), xcol);
        const double skip = params.has_skip() ? params.d_skip[ch] : 0.0;
        for (int t = 0; t < length; ++t)
            y[static_cast<std::size_t>(t) * params.d + ch] = ycol[t] + skip * xcol[t];
    }
    return y;
}

Batch forward_batch(const SSMLayerParams& params, const Batch& input) {
    const DiscreteKernel kernel = compute_kernel(params, input.length);
    Batch out(input.n, input.length, input.dim);
    const int L = input.length;
    const int d = input.dim;
    std::vector<double> xcol(L);
    for (int ch = 0; ch < d; ++ch) {
        const std::vector<double> kcol = kernel.channel(ch);
        const double skip = params.has_skip() ? params.d_skip[ch] : 0.0;
        for (int i = 0; i < input.n; ++i) {
            const double* xs = input.seq(i);
            for (int t = 0; t < L; ++t) xcol[t] = xs[static_cast<std::size_t>(t) * d + ch];
            const std::vector<double> ycol = conv_causal_fft(kcol, xcol);
            double* ys = out.seq(i);
            for (int t = 0; t < L; ++t) ys[static_cast<std::size_t>(t) * d + ch] = ycol[t] + skip * xcol[t];
        }
    }
    return out;
}

double continuous_kernel(const SSMLayerParams& params, double s, int ch) {
    if (params.repr == Repr::Diag) {
        Complex acc(0.0, 0.0);
        for (int n = 0; n < params.m; ++n) acc += params.c(ch, n) * std::exp(params.lambda(n) * s) * params.b(n);
        return acc.real();
    }
    Eigen::VectorXd b(params.m), c_row(params.m);
    for (int n = 0; n < params.m; ++n) {
        b[n] = params.b_re[n];
        c_row[n] = params.c_re[static_cast<std::size_t>(ch) * params.m + n];
    }
    const Eigen::MatrixXd e = (s * params.a_full).exp();
    return c_row.dot(e * b);
}

std::vector<double> continuous_kernel_grid(const SSMLayerParams& params, int ch, double t0, double h, int count) {
    std::vector<double> out(count);
    if (count <= 0) return out;
    if (params.repr == Repr::Diag) {
        // rho(t0 + i h) = Re(sum_n (c b e^{lambda t0}) * (e^{lambda h})^i)
        std::vector<double> wr(params.m), wi(params.m), zr(params.m), zi(params.m);
        for (int n = 0; n < params.m; ++n) {
            const Complex lam = params.lambda(n);
            const Complex w = params.c(ch, n) * params.b(n) * std::exp(lam * t0);
            const Complex z = std::exp(lam * h);
            wr[n] = w.real();
            wi[n] = w.imag();
            zr[n] = z.real();
            zi[n] = z.imag();
        }
        kern::active().vandermonde_taps(params.m, count, wr.data(), wi.data(), zr.data(), zi.data(), out.data());
        return out;
    }
    Eigen::VectorXd b(params.m), c_row(params.m);
    for (int n = 0; n < params.m; ++n) {
        b[n] = params.b_re[n];
        c_row[n] = params.c_re[static_cast<std::size_t>(ch) * params.m + n];
    }
    Eigen::VectorXd v = (t0 * params.a_full).exp() * b;
    const Eigen::MatrixXd step = (h * params.a_full).exp();
    for (int i = 0; i < count; ++i) {
        out[i] = c_row.dot(v);
        if (i + 1 < count) v = step * v;
    }
    return out;
}

void scale_c(SSMLayerParams& params, double factor) {
    for (auto& v : params.c_re) v *= factor;
    for (auto& v : params.c_im) v *= factor;
}

void scale_c_channel(SSMLayerParams& params, int ch, double factor) {
    for (int n = 0; n < params.m; ++n) {
        params.c_re[static_cast<std::size_t>(ch) * params.m + n] *= factor;
        params.c_im[static_cast<std::size_t>(ch) * params.m + n] *= factor;
    }
}

}  // namespace ssmgen
