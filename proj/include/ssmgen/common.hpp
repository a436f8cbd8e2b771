#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssmgen {

using Complex = std::complex<double>;

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// splitmix64; used to derive independent per-item seeds from a base seed.
// Split rule: item i gets stream_seed(base, i) = splitmix64 state advanced i+1 times.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t s = base + (index + 1) * 0x9E3779B97F4A7C15ull;
    return splitmix64(s);
}

// Box-Muller normal sampler on top of mt19937_64. Implementation-pinned so
// datasets and training runs are reproducible independent of the standard
// library's std::normal_distribution.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double uniform01() {
        // 53-bit mantissa uniform in [0,1)
        return (engine_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// FNV-1a, used for config/model/dataset fingerprints in emitted reports.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xCBF29CE484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

// Batch of n sequences, each L positions by d channels, row-major [seq][pos][ch].
struct Batch {
    int n = 0;
    int length = 0;
    int dim = 0;
    std::vector<double> data;

    Batch() = default;
    Batch(int n_, int length_, int dim_)
        : n(n_), length(length_), dim(dim_), data(static_cast<std::size_t>(n_) * length_ * dim_, 0.0) {}

    double* seq(int i) { return data.data() + static_cast<std::size_t>(i) * length * dim; }
    const double* seq(int i) const { return data.data() + static_cast<std::size_t>(i) * length * dim; }

    double& at(int i, int pos, int ch) { return data[(static_cast<std::size_t>(i) * length + pos) * dim + ch]; }
    double at(int i, int pos, int ch) const { return data[(static_cast<std::size_t>(i) * length + pos) * dim + ch]; }
};

}  // namespace ssmgen
