#pragma once

#include <string>

// Runtime-dispatched arithmetic kernels. Every operation has a scalar
// reference implementation and, on x86-64 with AVX2, a vectorized variant.
// The active table is chosen once at startup (cpuid), can be forced through
// the SSMGEN_SIMD environment variable ("scalar", "avx2", "auto"), and can be
// overridden programmatically for equivalence tests.

namespace ssmgen::kern {

struct Ops {
    const char* name;

    // taps[j] = sum_n Re(w[n] * z[n]^j), j = 0..length-1.
    // Complex inputs in split (SoA) layout: w = wr + i*wi, z = zr + i*zi.
    void (*vandermonde_taps)(int m, int length,
                             const double* wr, const double* wi,
                             const double* zr, const double* zi,
                             double* taps);

    // Adjoints of vandermonde_taps. Given g[j] = dL/dtaps[j], accumulates
    //   gw[n] += sum_j g[j] * conj(z[n]^j)
    //   gz[n] += sum_j g[j] * j * conj(w[n] * z[n]^(j-1))
    // into split outputs (gwr, gwi, gzr, gzi).
    void (*vandermonde_adjoints)(int m, int length,
                                 const double* wr, const double* wi,
                                 const double* zr, const double* zi,
                                 const double* g,
                                 double* gwr, double* gwi,
                                 double* gzr, double* gzi);

    // Element-wise complex multiply, split layout: out = a * b.
    void (*cmul)(int n, const double* ar, const double* ai,
                 const double* br, const double* bi,
                 double* outr, double* outi);

    // acc[i] += x[i]; acc2[i] += x[i]^2  (batch moment accumulation)
    void (*accumulate_moments)(int n, const double* x, double* acc, double* acc2);

    // sum_i |k[i]| * w[i]
    double (*weighted_abs_dot)(int n, const double* k, const double* w);

    // sum_i a[i] * b[i]
    double (*dot)(int n, const double* a, const double* b);

    // sum_i |x[i]|
    double (*abs_sum)(int n, const double* x);

    // y[i] += alpha * x[i]
    void (*axpy)(int n, double alpha, const double* x, double* y);
};

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported();
const Ops& avx2_ops();
#endif

// Active table (resolved once; honors SSMGEN_SIMD on first use).
const Ops& active();

// Force a backend by name ("scalar", "avx2", "auto"); throws on unknown or
// unsupported names. Primarily for tests and the CLI --simd flag.
void force_backend(const std::string& name);

}  // namespace ssmgen::kern
