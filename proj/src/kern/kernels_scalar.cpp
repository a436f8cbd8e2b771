#include "ssmgen/kern.hpp"

#include <cmath>
#include <vector>

// Scalar reference kernels. These define the semantics; the SIMD variants
// are equivalence-tested against them.

namespace ssmgen::kern {
namespace {

void vandermonde_taps_scalar(int m, int length,
                             const double* wr, const double* wi,
                             const double* zr, const double* zi,
                             double* taps) {
    // running powers p[n] = z[n]^j
    std::vector<double> pr(m, 1.0), pi(m, 0.0);
    for (int j = 0; j < length; ++j) {
        double acc = 0.0;
        for (int n = 0; n < m; ++n) {
            acc += wr[n] * pr[n] - wi[n] * pi[n];
        }
        taps[j] = acc;
        if (j + 1 < length) {
            for (int n = 0; n < m; ++n) {
                const double nr = pr[n] * zr[n] - pi[n] * zi[n];
                const double ni = pr[n] * zi[n] + pi[n] * zr[n];
                pr[n] = nr;
                pi[n] = ni;
            }
        }
    }
}

void vandermonde_adjoints_scalar(int m, int length,
                                 const double* wr, const double* wi,
                                 const double* zr, const double* zi,
                                 const double* g,
                                 double* gwr, double* gwi,
                                 double* gzr, double* gzi) {
    std::vector<double> pr(m, 1.0), pi(m, 0.0);    // z^j
    std::vector<double> qr(m, 0.0), qi(m, 0.0);    // z^(j-1), undefined at j=0
    for (int j = 0; j < length; ++j) {
        const double gj = g[j];
        if (gj != 0.0) {
            for (int n = 0; n < m; ++n) {
                // gw += g * conj(p)
                gwr[n] += gj * pr[n];
                gwi[n] -= gj * pi[n];
            }
            if (j > 0) {
                const double jg = gj * j;
                for (int n = 0; n < m; ++n) {
                    // gz += g * j * conj(w * q)
                    const double wqr = wr[n] * qr[n] - wi[n] * qi[n];
                    const double wqi = wr[n] * qi[n] + wi[n] * qr[n];
                    gzr[n] += jg * wqr;
                    gzi[n] -= jg * wqi;
                }
            }
        }
        if (j + 1 < length) {
            for (int n = 0; n < m; ++n) {
                qr[n] = pr[n];
                qi[n] = pi[n];
                const double nr = pr[n] * zr[n] - pi[n] * zi[n];
                const double ni = pr[n] * zi[n] + pi[n] * zr[n];
                pr[n] = nr;
                pi[n] = ni;
            }
        }
    }
}

void cmul_scalar(int n, const double* ar, const double* ai,
                 const double* br, const double* bi,
                 double* outr, double* outi) {
    for (int i = 0; i < n; ++i) {
        const double re = ar[i] * br[i] - ai[i] * bi[i];
        const double im = ar[i] * bi[i] + ai[i] * br[i];
        outr[i] = re;
        outi[i] = im;
    }
}

void accumulate_moments_scalar(int n, const double* x, double* acc, double* acc2) {
    for (int i = 0; i < n; ++i) {
        acc[i] += x[i];
        acc2[i] += x[i] * x[i];
    }
}

double weighted_abs_dot_scalar(int n, const double* k, const double* w) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::fabs(k[i]) * w[i];
    return s;
}

double dot_scalar(int n, const double* a, const double* b) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double abs_sum_scalar(int n, const double* x) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

void axpy_scalar(int n, double alpha, const double* x, double* y) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",
        vandermonde_taps_scalar,
        vandermonde_adjoints_scalar,
        cmul_scalar,
        accumulate_moments_scalar,
        weighted_abs_dot_scalar,
        dot_scalar,
        abs_sum_scalar,
        axpy_scalar,
    };
    return ops;
}

}  // namespace ssmgen::kern
