#if defined(__x86_64__) || defined(_M_X64)

#include "ssmgen/kern.hpp"

#include <immintrin.h>

#include <cmath>
#include <vector>

// AVX2 variants. Compiled with -mavx2 -mfma; only reached after the dispatch
// layer has checked cpuid. Lanes run over the state dimension (complex values
// in split re/im arrays), with scalar remainder loops.

namespace ssmgen::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

void vandermonde_taps_avx2(int m, int length,
                           const double* wr, const double* wi,
                           const double* zr, const double* zi,
                           double* taps) {
    std::vector<double> pr(m, 1.0), pi(m, 0.0);
    const int mv = m - (m % 4);
    for (int j = 0; j < length; ++j) {
        __m256d accv = _mm256_setzero_pd();
        int n = 0;
        for (; n < mv; n += 4) {
            const __m256d wrv = _mm256_loadu_pd(wr + n);
            const __m256d wiv = _mm256_loadu_pd(wi + n);
            const __m256d prv = _mm256_loadu_pd(pr.data() + n);
            const __m256d piv = _mm256_loadu_pd(pi.data() + n);
            // Re(w * p) = wr*pr - wi*pi
            accv = _mm256_add_pd(accv, _mm256_fmsub_pd(wrv, prv, _mm256_mul_pd(wiv, piv)));
        }
        double acc = hsum(accv);
        for (; n < m; ++n) acc += wr[n] * pr[n] - wi[n] * pi[n];
        taps[j] = acc;

        if (j + 1 < length) {
            n = 0;
            for (; n < mv; n += 4) {
                const __m256d prv = _mm256_loadu_pd(pr.data() + n);
                const __m256d piv = _mm256_loadu_pd(pi.data() + n);
                const __m256d zrv = _mm256_loadu_pd(zr + n);
                const __m256d ziv = _mm256_loadu_pd(zi + n);
                const __m256d nr = _mm256_fmsub_pd(prv, zrv, _mm256_mul_pd(piv, ziv));
                const __m256d ni = _mm256_fmadd_pd(prv, ziv, _mm256_mul_pd(piv, zrv));
                _mm256_storeu_pd(pr.data() + n, nr);
                _mm256_storeu_pd(pi.data() + n, ni);
            }
            for (; n < m; ++n) {
                const double nr = pr[n] * zr[n] - pi[n] * zi[n];
                const double ni = pr[n] * zi[n] + pi[n] * zr[n];
                pr[n] = nr;
                pi[n] = ni;
            }
        }
    }
}

void vandermonde_adjoints_avx2(int m, int length,
                               const double* wr, const double* wi,
                               const double* zr, const double* zi,
                               const double* g,
                               double* gwr, double* gwi,
                               double* gzr, double* gzi) {
    std::vector<double> pr(m, 1.0), pi(m, 0.0);
    std::vector<double> qr(m, 0.0), qi(m, 0.0);
    const int mv = m - (m % 4);
    for (int j = 0; j < length; ++j) {
        const double gj = g[j];
        if (gj != 0.0) {
            const __m256d gv = _mm256_set1_pd(gj);
            int n = 0;
            for (; n < mv; n += 4) {
                const __m256d prv = _mm256_loadu_pd(pr.data() + n);
                const __m256d piv = _mm256_loadu_pd(pi.data() + n);
                _mm256_storeu_pd(gwr + n, _mm256_fmadd_pd(gv, prv, _mm256_loadu_pd(gwr + n)));
                _mm256_storeu_pd(gwi + n, _mm256_fnmadd_pd(gv, piv, _mm256_loadu_pd(gwi + n)));
            }
            for (; n < m; ++n) {
                gwr[n] += gj * pr[n];
                gwi[n] -= gj * pi[n];
            }
            if (j > 0) {
                const double jg = gj * j;
                const __m256d jgv = _mm256_set1_pd(jg);
                n = 0;
                for (; n < mv; n += 4) {
                    const __m256d wrv = _mm256_loadu_pd(wr + n);
                    const __m256d wiv = _mm256_loadu_pd(wi + n);
                    const __m256d qrv = _mm256_loadu_pd(qr.data() + n);
                    const __m256d qiv = _mm256_loadu_pd(qi.data() + n);
                    const __m256d wqr = _mm256_fmsub_pd(wrv, qrv, _mm256_mul_pd(wiv, qiv));
                    const __m256d wqi = _mm256_fmadd_pd(wrv, qiv, _mm256_mul_pd(wiv, qrv));
                    _mm256_storeu_pd(gzr + n, _mm256_fmadd_pd(jgv, wqr, _mm256_loadu_pd(gzr + n)));
                    _mm256_storeu_pd(gzi + n, _mm256_fnmadd_pd(jgv, wqi, _mm256_loadu_pd(gzi + n)));
                }
                for (; n < m; ++n) {
                    const double wqr = wr[n] * qr[n] - wi[n] * qi[n];
                    const double wqi = wr[n] * qi[n] + wi[n] * qr[n];
                    gzr[n] += jg * wqr;
                    gzi[n] -= jg * wqi;
                }
            }
        }
        if (j + 1 < length) {
            int n = 0;
            for (; n < mv; n += 4) {
                const __m256d prv = _mm256_loadu_pd(pr.data() + n);
                const __m256d piv = _mm256_loadu_pd(pi.data() + n);
                _mm256_storeu_pd(qr.data() + n, prv);
                _mm256_storeu_pd(qi.data() + n, piv);
                const __m256d zrv = _mm256_loadu_pd(zr + n);
                const __m256d ziv = _mm256_loadu_pd(zi + n);
                const __m256d nr = _mm256_fmsub_pd(prv, zrv, _mm256_mul_pd(piv, ziv));
                const __m256d ni = _mm256_fmadd_pd(prv, ziv, _mm256_mul_pd(piv, zrv));
                _mm256_storeu_pd(pr.data() + n, nr);
                _mm256_storeu_pd(pi.data() + n, ni);
            }
            for (; n < m; ++n) {
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

void cmul_avx2(int n, const double* ar, const double* ai,
               const double* br, const double* bi,
               double* outr, double* outi) {
    const int nv = n - (n % 4);
    int i = 0;
    for (; i < nv; i += 4) {
        const __m256d arv = _mm256_loadu_pd(ar + i);
        const __m256d aiv = _mm256_loadu_pd(ai + i);
        const __m256d brv = _mm256_loadu_pd(br + i);
        const __m256d biv = _mm256_loadu_pd(bi + i);
        const __m256d re = _mm256_fmsub_pd(arv, brv, _mm256_mul_pd(aiv, biv));
        const __m256d im = _mm256_fmadd_pd(arv, biv, _mm256_mul_pd(aiv, brv));
        _mm256_storeu_pd(outr + i, re);
        _mm256_storeu_pd(outi + i, im);
    }
    for (; i < n; ++i) {
        const double re = ar[i] * br[i] - ai[i] * bi[i];
        const double im = ar[i] * bi[i] + ai[i] * br[i];
        outr[i] = re;
        outi[i] = im;
    }
}

void accumulate_moments_avx2(int n, const double* x, double* acc, double* acc2) {
    const int nv = n - (n % 4);
    int i = 0;
    for (; i < nv; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), xv));
        _mm256_storeu_pd(acc2 + i, _mm256_fmadd_pd(xv, xv, _mm256_loadu_pd(acc2 + i)));
    }
    for (; i < n; ++i) {
        acc[i] += x[i];
        acc2[i] += x[i] * x[i];
    }
}

inline __m256d abs_pd(__m256d v) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
    return _mm256_and_pd(v, mask);
}

double weighted_abs_dot_avx2(int n, const double* k, const double* w) {
    __m256d accv = _mm256_setzero_pd();
    const int nv = n - (n % 4);
    int i = 0;
    for (; i < nv; i += 4) {
        accv = _mm256_fmadd_pd(abs_pd(_mm256_loadu_pd(k + i)), _mm256_loadu_pd(w + i), accv);
    }
    double s = hsum(accv);
    for (; i < n; ++i) s += std::fabs(k[i]) * w[i];
    return s;
}

double dot_avx2(int n, const double* a, const double* b) {
    __m256d accv = _mm256_setzero_pd();
    const int nv = n - (n % 4);
    int i = 0;
    for (; i < nv; i += 4) {
        accv = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), accv);
    }
    double s = hsum(accv);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double abs_sum_avx2(int n, const double* x) {
    __m256d accv = _mm256_setzero_pd();
    const int nv = n - (n % 4);
    int i = 0;
    for (; i < nv; i += 4) {
        accv = _mm256_add_pd(accv, abs_pd(_mm256_loadu_pd(x + i)));
    }
    double s = hsum(accv);
    for (; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

void axpy_avx2(int n, double alpha, const double* x, double* y) {
    const __m256d av = _mm256_set1_pd(alpha);
    const int nv = n - (n % 4);
    int i = 0;
    for (; i < nv; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        "avx2",
        vandermonde_taps_avx2,
        vandermonde_adjoints_avx2,
        cmul_avx2,
        accumulate_moments_avx2,
        weighted_abs_dot_avx2,
        dot_avx2,
        abs_sum_avx2,
        axpy_avx2,
    };
    return ops;
}

}  // namespace ssmgen::kern

#endif  // x86-64
