#include "ssmgen/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "ssmgen/kern.hpp"

namespace ssmgen {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Twiddle tables per transform size, built once. Guarded for the pure/shared
// concurrency contract.
const std::vector<Complex>& twiddles(int n) {
    static std::map<int, std::vector<Complex>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<Complex> w(n / 2);
    for (int k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * kPi * k / n;
        w[k] = Complex(std::cos(ang), std::sin(ang));
    }
    return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace

void fft_inplace(std::vector<Complex>& a, bool inverse) {
    const int n = static_cast<int>(a.size());
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");
    if (n == 1) return;

    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const auto& w = twiddles(n);
    for (int len = 2; len <= n; len <<= 1) {
        const int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int k = 0; k < len / 2; ++k) {
                Complex tw = w[k * step];
                if (inverse) tw = std::conj(tw);
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * tw;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / n;
        for (auto& c : a) c *= inv;
    }
}

RealSpectrum forward_spectrum(const double* x, int length, int nfft) {
    std::vector<Complex> buf(nfft, Complex(0.0, 0.0));
    for (int i = 0; i < length; ++i) buf[i] = Complex(x[i], 0.0);
    fft_inplace(buf, false);
    RealSpectrum s;
    s.length = length;
    s.nfft = nfft;
    s.re.resize(nfft);
    s.im.resize(nfft);
    for (int i = 0; i < nfft; ++i) {
        s.re[i] = buf[i].real();
        s.im[i] = buf[i].imag();
    }
    return s;
}

std::vector<double> conv_causal_with_spectrum(const std::vector<double>& k, const RealSpectrum& xs) {
    const int length = xs.length;
    const int nfft = xs.nfft;
    std::vector<Complex> kb(nfft, Complex(0.0, 0.0));
    const int kl = std::min<int>(static_cast<int>(k.size()), length);
    for (int i = 0; i < kl; ++i) kb[i] = Complex(k[i], 0.0);
    fft_inplace(kb, false);

    std::vector<double> kr(nfft), ki(nfft), pr(nfft), pi(nfft);
    for (int i = 0; i < nfft; ++i) {
        kr[i] = kb[i].real();
        ki[i] = kb[i].imag();
    }
    kern::active().cmul(nfft, kr.data(), ki.data(), xs.re.data(), xs.im.data(), pr.data(), pi.data());
    std::vector<Complex> prod(nfft);
    for (int i = 0; i < nfft; ++i) prod[i] = Complex(pr[i], pi[i]);
    fft_inplace(prod, true);

    std::vector<double> out(length);
    for (int t = 0; t < length; ++t) out[t] = prod[t].real();
    return out;
}

std::vector<double> conv_causal_fft(const std::vector<double>& k, const std::vector<double>& x) {
    const int length = static_cast<int>(x.size());
    if (length == 0) return {};
    const int nfft = next_pow2(2 * length);
    const RealSpectrum xs = forward_spectrum(x.data(), length, nfft);
    return conv_causal_with_spectrum(k, xs);
}

std::vector<double> correlate_causal_fft(const std::vector<double>& a, const std::vector<double>& b) {
    // out[j] = sum_{t>=j} a[t] b[t-j] = conv(a, reverse(b))[L-1+j]
    const int length = static_cast<int>(a.size());
    if (length == 0) return {};
    if (b.size() != a.size()) throw std::invalid_argument("correlate_causal_fft: length mismatch");
    const int nfft = next_pow2(2 * length);
    std::vector<Complex> ab(nfft, Complex(0.0, 0.0)), bb(nfft, Complex(0.0, 0.0));
    for (int i = 0; i < length; ++i) ab[i] = Complex(a[i], 0.0);
    for (int i = 0; i < length; ++i) bb[i] = Complex(b[length - 1 - i], 0.0);
    fft_inplace(ab, false);
    fft_inplace(bb, false);
    for (int i = 0; i < nfft; ++i) ab[i] *= bb[i];
    fft_inplace(ab, true);
    std::vector<double> out(length);
    for (int j = 0; j < length; ++j) out[j] = ab[length - 1 + j].real();
    return out;
}

}  // namespace ssmgen
