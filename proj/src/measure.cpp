#include "ssmgen/measure.hpp"

#include <cmath>
#include <stdexcept>

#include "ssmgen/kern.hpp"
#include "ssmgen/serialize.hpp"

namespace ssmgen {

SequenceStats compute_stats(const Batch& batch) {
    if (batch.n < 2) throw std::invalid_argument("need at least 2 sequences for variance");
    const int len = batch.length * batch.dim;
    SequenceStats stats;
    stats.length = batch.length;
    stats.d = batch.dim;
    stats.mu.assign(len, 0.0);
    stats.var.assign(len, 0.0);
    std::vector<double> sumsq(len, 0.0);
    const auto& ops = kern::active();
    for (int i = 0; i < batch.n; ++i) ops.accumulate_moments(len, batch.seq(i), stats.mu.data(), sumsq.data());
    const double inv_n = 1.0 / batch.n;
    for (int j = 0; j < len; ++j) {
        stats.mu[j] *= inv_n;
        stats.var[j] = std::max(0.0, sumsq[j] * inv_n - stats.mu[j] * stats.mu[j]);
    }
    return stats;
}

MeasureParts discrete_measure_parts(const DiscreteKernel& kernel, const SequenceStats& stats) {
    if (kernel.length != stats.length || kernel.d != stats.d)
        throw std::invalid_argument("kernel and stats shapes do not match");
    const int L = kernel.length;
    const int d = kernel.d;
    MeasureParts parts;
    parts.abs_term.resize(d);
    parts.mean_term.resize(d);
    std::vector<double> kcol(L), sig_rev(L), mu_rev(L);
    const auto& ops = kern::active();
    double acc = 0.0;
    for (int ch = 0; ch < d; ++ch) {
        for (int j = 0; j < L; ++j) {
            kcol[j] = kernel.at(j, ch);
            sig_rev[j] = std::sqrt(stats.var_at(L - 1 - j, ch));
            mu_rev[j] = stats.mu_at(L - 1 - j, ch);
        }
        parts.abs_term[ch] = ops.weighted_abs_dot(L, kcol.data(), sig_rev.data());
        parts.mean_term[ch] = ops.dot(L, kcol.data(), mu_rev.data());
        const double t = parts.abs_term[ch] + std::fabs(parts.mean_term[ch]);
        acc += t * t;
    }
    parts.tau = acc / d;
    return parts;
}

double discrete_measure(const DiscreteKernel& kernel, const SequenceStats& stats) {
    return discrete_measure_parts(kernel, stats).tau;
}

namespace {

struct Integrals {
    double abs_part = 0.0;
    double mean_part = 0.0;
};

// Simpson quadrature of the two measure integrands for one channel, with the
// kernel argument offset + (T - s), s in [0, T].
Integrals integrate_channel(const SSMLayerParams& params, int ch, double offset, double horizon,
                            const ScalarFn& mean_fn, const ScalarFn& var_fn, int panels) {
    const double h = horizon / panels;
    // rho(offset + horizon - s_i) for s_i = i*h equals grid value at index
    // (panels - i) of the grid offset + j*h, j = 0..panels.
    const std::vector<double> rho = continuous_kernel_grid(params, ch, offset, h, panels + 1);
    Integrals out;
    double abs_acc = 0.0, mean_acc = 0.0;
    for (int i = 0; i <= panels; ++i) {
        const double s = i * h;
        const double v = var_fn(s);
        const double mu = mean_fn(s);
        const double r = rho[panels - i];
        const double fa = std::fabs(r) * std::sqrt(v);
        const double fm = r * mu;
        if (!std::isfinite(fa) || !std::isfinite(fm)) throw std::runtime_error("non-finite measure integrand");
        const double wgt = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        abs_acc += wgt * fa;
        mean_acc += wgt * fm;
    }
    out.abs_part = abs_acc * h / 3.0;
    out.mean_part = mean_acc * h / 3.0;
    return out;
}

Integrals integrate_adaptive(const SSMLayerParams& params, int ch, double offset, double horizon,
                             const ScalarFn& mean_fn, const ScalarFn& var_fn) {
    constexpr int kStartPanels = 4096;
    constexpr int kMaxPanels = 1 << 17;
    constexpr double kRelTol = 1e-8;
    Integrals prev = integrate_channel(params, ch, offset, horizon, mean_fn, var_fn, kStartPanels);
    for (int panels = 2 * kStartPanels; panels <= kMaxPanels; panels *= 2) {
        const Integrals next = integrate_channel(params, ch, offset, horizon, mean_fn, var_fn, panels);
        const double a = prev.abs_part + std::fabs(prev.mean_part);
        const double b = next.abs_part + std::fabs(next.mean_part);
        prev = next;
        if (std::fabs(b - a) <= kRelTol * std::max(std::fabs(b), 1e-30)) break;
    }
    return prev;
}

double combine_channels(const SSMLayerParams& params, double offset, double horizon, const ScalarFn& mean_fn,
                        const ScalarFn& var_fn) {
    double acc = 0.0;
    for (int ch = 0; ch < params.d; ++ch) {
        const Integrals in = integrate_adaptive(params, ch, offset, horizon, mean_fn, var_fn);
        const double t = in.abs_part + std::fabs(in.mean_part);
        acc += t * t;
    }
    return acc / params.d;
}

}  // namespace

double continuous_measure(const SSMLayerParams& params, const ScalarFn& mean_fn, const ScalarFn& var_fn,
                          double horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    params.validate();
    return combine_channels(params, 0.0, horizon, mean_fn, var_fn);
}

std::pair<double, double> padding_measures(const SSMLayerParams& params, const ScalarFn& mean_fn,
                                           const ScalarFn& var_fn, double horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    params.validate();
    double left_acc = 0.0, right_acc = 0.0;
    for (int ch = 0; ch < params.d; ++ch) {
        const Integrals l = integrate_adaptive(params, ch, 0.0, horizon, mean_fn, var_fn);
        const Integrals r = integrate_adaptive(params, ch, horizon, horizon, mean_fn, var_fn);
        left_acc += l.abs_part + std::fabs(l.mean_part);
        right_acc += r.abs_part + std::fabs(r.mean_part);
    }
    return {left_acc / params.d + 1.0, right_acc / params.d + 1.0};
}

SSMLayerParams transfer_params(const SSMLayerParams& params, double factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("transfer factor must be positive");
    SSMLayerParams out = params;
    scale_c(out, factor);
    const double log_factor = std::log(factor);
    if (out.repr == Repr::Diag) {
        for (int n = 0; n < out.m; ++n) {
            out.a_log_re[n] += log_factor;
            out.a_im[n] *= factor;
        }
    } else {
        out.a_full *= factor;
    }
    return out;
}

std::vector<double> layer_measures(const std::vector<SSMLayerParams>& model, const Batch& batch,
                                   std::vector<SequenceStats>* stats_out, std::vector<Batch>* inputs_out) {
    std::vector<double> taus;
    taus.reserve(model.size());
    Batch current = batch;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const SequenceStats stats = compute_stats(current);
        const DiscreteKernel kernel = compute_kernel(model[i], current.length);
        taus.push_back(discrete_measure(kernel, stats));
        if (stats_out) stats_out->push_back(stats);
        if (inputs_out) inputs_out->push_back(current);
        if (i + 1 < model.size()) current = forward_batch(model[i], current);
    }
    return taus;
}

MeasureReport measure_report(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset) {
    MeasureReport report;
    report.tau_per_layer = layer_measures(model, dataset.inputs);
    report.tau_total = 0.0;
    for (double t : report.tau_per_layer) report.tau_total += t;
    report.n = dataset.inputs.n;
    report.psi_sq_over_sqrt_n = report.tau_total / std::sqrt(static_cast<double>(report.n));
    report.model_hash = model_hash(model);
    report.dataset_hash = dataset_hash(dataset);
    return report;
}

nlohmann::json report_to_json(const MeasureReport& report) {
    nlohmann::json j;
    j["tau_per_layer"] = report.tau_per_layer;
    j["tau_total"] = report.tau_total;
    j["psi_sq_over_sqrt_n"] = report.psi_sq_over_sqrt_n;
    j["n"] = report.n;
    j["model_hash"] = report.model_hash;
    j["dataset_hash"] = report.dataset_hash;
    return j;
}

}  // namespace ssmgen
