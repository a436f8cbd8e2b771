#include "ssmgen/init.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ssmgen {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegenerateMeasure = 1e-12;
}  // namespace

void InitConfig::validate() const {
    if (m <= 0 || d <= 0 || layers <= 0) throw std::invalid_argument("init dimensions must be positive");
    if (!(delta_min > 0.0) || !(delta_max > delta_min))
        throw std::invalid_argument("delta bounds must satisfy 0 < lo < hi");
}

std::string init_kind_name(InitKind kind) { return kind == InitKind::LegsFull ? "legs_full" : "legs_diag"; }

InitKind init_kind_from_name(const std::string& name) {
    if (name == "legs_full") return InitKind::LegsFull;
    if (name == "legs_diag") return InitKind::LegsDiag;
    throw std::invalid_argument("unknown init kind: " + name);
}

std::vector<SSMLayerParams> init_hippo(const InitConfig& config) {
    config.validate();
    std::vector<SSMLayerParams> model;
    model.reserve(config.layers);
    const double log_lo = std::log(config.delta_min);
    const double log_hi = std::log(config.delta_max);

    for (int layer = 0; layer < config.layers; ++layer) {
        NormalSampler sampler(stream_seed(config.seed, layer));
        SSMLayerParams p;
        p.m = config.m;
        p.d = config.d;
        p.delta.resize(config.d);
        for (int ch = 0; ch < config.d; ++ch)
            p.delta[ch] = std::exp(log_lo + sampler.uniform01() * (log_hi - log_lo));

        if (config.kind == InitKind::LegsFull) {
            p.repr = Repr::Full;
            p.a_full = Eigen::MatrixXd::Zero(config.m, config.m);
            for (int n = 0; n < config.m; ++n) {
                for (int k = 0; k < n; ++k)
                    p.a_full(n, k) = -std::sqrt(2.0 * n + 1.0) * std::sqrt(2.0 * k + 1.0);
                p.a_full(n, n) = -(n + 1.0);
            }
            p.b_re.resize(config.m);
            p.b_im.assign(config.m, 0.0);
            for (int n = 0; n < config.m; ++n) p.b_re[n] = std::sqrt(2.0 * n + 1.0);
            p.c_re.resize(static_cast<std::size_t>(config.d) * config.m);
            p.c_im.assign(p.c_re.size(), 0.0);
            for (auto& v : p.c_re) v = sampler.next();
        } else {
            p.repr = Repr::Diag;
            p.a_log_re.assign(config.m, std::log(0.5));
            p.a_im.resize(config.m);
            for (int n = 0; n < config.m; ++n) p.a_im[n] = kPi * n;
            p.b_re.assign(config.m, 1.0);
            p.b_im.assign(config.m, 0.0);
            p.c_re.resize(static_cast<std::size_t>(config.d) * config.m);
            p.c_im.resize(p.c_re.size());
            for (std::size_t i = 0; i < p.c_re.size(); ++i) {
                p.c_re[i] = sampler.next();
                p.c_im[i] = sampler.next();
            }
        }
        p.validate();
        model.push_back(std::move(p));
    }
    return model;
}

SSMLayerParams rescale_c(const SSMLayerParams& params, double tau) {
    if (!(tau > 0.0)) throw std::domain_error("degenerate measure");
    SSMLayerParams out = params;
    scale_c(out, 1.0 / std::sqrt(tau));
    return out;
}

SSMLayerParams rescale_with_skip(const SSMLayerParams& params, double tau_conv, double tau_skip) {
    SSMLayerParams out = rescale_c(params, tau_conv);
    if (!params.has_skip()) return out;  // D = 0 reduces to the plain rescale
    if (!(tau_skip > 0.0)) throw std::domain_error("degenerate measure");
    const double s = 1.0 / std::sqrt(tau_skip);
    for (auto& v : out.d_skip) v *= s;
    return out;
}

double skip_measure(const SSMLayerParams& params, const SequenceStats& stats) {
    if (!params.has_skip()) return 0.0;
    const int last = stats.length - 1;
    double acc = 0.0;
    for (int ch = 0; ch < params.d; ++ch) {
        const double dskip = params.d_skip[ch];
        const double t = std::fabs(dskip) * std::sqrt(stats.var_at(last, ch)) +
                         std::fabs(dskip * stats.mu_at(last, ch));
        acc += t * t;
    }
    return acc / params.d;
}

RescaleResult rescale_all_layers(const std::vector<SSMLayerParams>& model, const Batch& minibatch) {
    if (minibatch.n < 2) throw std::invalid_argument("rescaling needs a minibatch of at least 2 sequences");
    RescaleResult result;
    result.model = model;
    Batch current = minibatch;
    for (std::size_t i = 0; i < result.model.size(); ++i) {
        SSMLayerParams& layer = result.model[i];
        const SequenceStats stats = compute_stats(current);
        const DiscreteKernel kernel = compute_kernel(layer, current.length);
        const double tau = discrete_measure(kernel, stats);
        result.tau_trace.push_back(tau);
        if (tau > kDegenerateMeasure) {
            scale_c(layer, 1.0 / std::sqrt(tau));
        } else {
            std::fprintf(stderr, "warning: layer %zu measure %.3e is degenerate, skipping rescale\n", i, tau);
        }
        if (layer.has_skip()) {
            const double tau_skip = skip_measure(layer, stats);
            if (tau_skip > kDegenerateMeasure) {
                const double s = 1.0 / std::sqrt(tau_skip);
                for (auto& v : layer.d_skip) v *= s;
            }
        }
        if (i + 1 < result.model.size()) current = forward_batch(layer, current);
    }
    return result;
}

}  // namespace ssmgen
