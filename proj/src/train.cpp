#include "ssmgen/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ssmgen/fft.hpp"
#include "ssmgen/kern.hpp"

namespace ssmgen {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

double signum(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_trainable(const std::vector<SSMLayerParams>& model) {
    if (model.empty()) throw std::invalid_argument("model has no layers");
    for (const auto& layer : model)
        if (layer.repr != Repr::Diag)
            throw std::invalid_argument("training requires the diagonal (exponential) parameterization");
}

struct LayerEval {
    DiscreteSystem sys;
    DiscreteKernel kernel;
    SequenceStats stats;        // of this layer's inputs (when computable)
    bool has_stats = false;
    MeasureParts tau_parts;     // data-dependent measure (history + tau penalty)
    MeasureParts filter_parts;  // mu=0, var=1 variant (filter_norm penalty)
    double penalty = 0.0;       // objective contribution before lambda
};

struct Evaluation {
    double mse = 0.0;
    std::vector<double> penalties;
    std::vector<double> taus;  // data-dependent measures per layer
    std::vector<double> preds;
    std::vector<LayerGrads> grads;
    bool finite = true;
};

double state_norm_sq(const SSMLayerParams& layer) {
    double acc = 0.0;
    for (int n = 0; n < layer.m; ++n) {
        const double re = std::exp(layer.a_log_re[n]);
        acc += re * re + layer.a_im[n] * layer.a_im[n];
    }
    return acc;
}

MeasureParts filter_norm_parts(const DiscreteKernel& kernel) {
    MeasureParts parts;
    parts.abs_term.resize(kernel.d);
    parts.mean_term.assign(kernel.d, 0.0);
    double acc = 0.0;
    std::vector<double> kcol(kernel.length);
    for (int ch = 0; ch < kernel.d; ++ch) {
        for (int j = 0; j < kernel.length; ++j) kcol[j] = kernel.at(j, ch);
        parts.abs_term[ch] = kern::active().abs_sum(kernel.length, kcol.data());
        acc += parts.abs_term[ch] * parts.abs_term[ch];
    }
    parts.tau = acc / kernel.d;
    return parts;
}

LayerGrads zero_grads(const SSMLayerParams& layer) {
    LayerGrads g;
    g.a_log_re.assign(layer.m, 0.0);
    g.a_im.assign(layer.m, 0.0);
    g.b_re.assign(layer.m, 0.0);
    g.b_im.assign(layer.m, 0.0);
    g.c_re.assign(static_cast<std::size_t>(layer.d) * layer.m, 0.0);
    g.c_im.assign(g.c_re.size(), 0.0);
    g.d_skip.assign(layer.has_skip() ? layer.d : 0, 0.0);
    g.delta.assign(layer.d, 0.0);
    return g;
}

// Backward through the ZOH/Vandermonde chain: G[j][ch] = dL/dk[j][ch] is
// pushed to the layer parameters. Complex adjoints follow the convention
// g_u = dL/dRe(u) + i dL/dIm(u), so holomorphic steps compose as
// g_in = g_out * conj(d out / d in).
void kernel_adjoint_to_params(const SSMLayerParams& layer, const LayerEval& ev, const std::vector<double>& big_g,
                              LayerGrads& g) {
    const int m = layer.m;
    const int L = ev.kernel.length;
    std::vector<double> wr(m), wi(m), zr(m), zi(m), gcol(L);
    std::vector<double> gwr(m), gwi(m), gzr(m), gzi(m);
    for (int ch = 0; ch < layer.d; ++ch) {
        const double dt = layer.delta[ch];
        for (int n = 0; n < m; ++n) {
            const Complex z = ev.sys.abar[static_cast<std::size_t>(ch) * m + n];
            const Complex w = layer.c(ch, n) * ev.sys.bbar[static_cast<std::size_t>(ch) * m + n];
            wr[n] = w.real();
            wi[n] = w.imag();
            zr[n] = z.real();
            zi[n] = z.imag();
        }
        for (int j = 0; j < L; ++j) gcol[j] = big_g[static_cast<std::size_t>(j) * layer.d + ch];
        std::fill(gwr.begin(), gwr.end(), 0.0);
        std::fill(gwi.begin(), gwi.end(), 0.0);
        std::fill(gzr.begin(), gzr.end(), 0.0);
        std::fill(gzi.begin(), gzi.end(), 0.0);
        kern::active().vandermonde_adjoints(m, L, wr.data(), wi.data(), zr.data(), zi.data(), gcol.data(),
                                            gwr.data(), gwi.data(), gzr.data(), gzi.data());
        for (int n = 0; n < m; ++n) {
            const Complex lam = layer.lambda(n);
            const Complex b = layer.b(n);
            const Complex c = layer.c(ch, n);
            const Complex z = ev.sys.abar[static_cast<std::size_t>(ch) * m + n];
            const Complex bbar = ev.sys.bbar[static_cast<std::size_t>(ch) * m + n];
            const Complex gw(gwr[n], gwi[n]);
            const Complex gz_vand(gzr[n], gzi[n]);

            const Complex gc = gw * std::conj(bbar);
            const Complex gbbar = gw * std::conj(c);
            const Complex gz = gz_vand + gbbar * std::conj(b / lam);
            const Complex gb = gbbar * std::conj((z - 1.0) / lam);
            const Complex glam = gz * std::conj(dt * z) + gbbar * std::conj(-(z - 1.0) * b / (lam * lam));

            g.c_re[static_cast<std::size_t>(ch) * m + n] += gc.real();
            g.c_im[static_cast<std::size_t>(ch) * m + n] += gc.imag();
            g.b_re[n] += gb.real();
            g.b_im[n] += gb.imag();
            g.delta[ch] += (gz * std::conj(lam * z)).real();
            g.a_log_re[n] += -std::exp(layer.a_log_re[n]) * glam.real();
            g.a_im[n] += glam.imag();
        }
    }
}

// gy for the layer below: gx[s][ch] = sum_{t>=s} gy[t][ch] k[t-s][ch] + D gy[s][ch]
Batch propagate_gy_dense(const SSMLayerParams& layer, const LayerEval& ev, const Batch& gy) {
    Batch gx(gy.n, gy.length, gy.dim);
    const int L = gy.length;
    std::vector<double> gycol(L);
    for (int ch = 0; ch < layer.d; ++ch) {
        const std::vector<double> kcol = ev.kernel.channel(ch);
        const double skip = layer.has_skip() ? layer.d_skip[ch] : 0.0;
        for (int i = 0; i < gy.n; ++i) {
            const double* gys = gy.seq(i);
            for (int t = 0; t < L; ++t) gycol[t] = gys[static_cast<std::size_t>(t) * layer.d + ch];
            const std::vector<double> gxcol = correlate_causal_fft(gycol, kcol);
            double* gxs = gx.seq(i);
            for (int s = 0; s < L; ++s)
                gxs[static_cast<std::size_t>(s) * layer.d + ch] = gxcol[s] + skip * gycol[s];
        }
    }
    return gx;
}

class Evaluator {
public:
    Evaluator(const std::vector<SSMLayerParams>& model, const Batch& batch, const std::vector<double>& labels,
              const TrainConfig& config)
        : model_(model), labels_(labels), config_(config) {
        inputs_.push_back(batch);
    }

    Evaluation run(bool want_grads) {
        forward();
        if (want_grads) backward();
        return std::move(out_);
    }

private:
    void forward() {
        const int layers = static_cast<int>(model_.size());
        const Batch& data = inputs_[0];
        const int L = data.length;
        const int d = data.dim;
        layer_evals_.resize(layers);
        out_.penalties.resize(layers, 0.0);
        out_.taus.resize(layers, 0.0);

        for (int i = 0; i < layers; ++i) {
            const SSMLayerParams& layer = model_[i];
            LayerEval& ev = layer_evals_[i];
            ev.sys = discretize_zoh(layer);
            ev.kernel = compute_kernel(layer, L);
            const Batch& x = inputs_[i];
            if (x.n >= 2) {
                ev.stats = compute_stats(x);
                ev.has_stats = true;
                ev.tau_parts = discrete_measure_parts(ev.kernel, ev.stats);
                out_.taus[i] = ev.tau_parts.tau;
            }
            switch (config_.regularizer) {
                case Regularizer::Tau:
                    if (!ev.has_stats) throw std::invalid_argument("tau regularizer needs a minibatch of >= 2 sequences");
                    ev.penalty = ev.tau_parts.tau;
                    break;
                case Regularizer::FilterNorm:
                    ev.filter_parts = filter_norm_parts(ev.kernel);
                    ev.penalty = ev.filter_parts.tau;
                    break;
                case Regularizer::WeightDecayA:
                    ev.penalty = state_norm_sq(layer);
                    break;
                case Regularizer::None:
                    ev.penalty = 0.0;
                    break;
            }
            out_.penalties[i] = ev.penalty;
            if (i + 1 < layers) inputs_.push_back(forward_batch(layer, inputs_[i]));
        }

        // last layer evaluated at the final position only
        const SSMLayerParams& top = model_.back();
        const LayerEval& top_ev = layer_evals_.back();
        const Batch& x = inputs_.back();
        out_.preds.resize(x.n);
        const auto& ops = kern::active();
        std::vector<double> xrev(L);
        double mse = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const double* xs = x.seq(i);
            double acc = 0.0;
            for (int ch = 0; ch < d; ++ch) {
                const std::vector<double> kcol = top_ev.kernel.channel(ch);
                for (int j = 0; j < L; ++j) xrev[j] = xs[static_cast<std::size_t>(L - 1 - j) * d + ch];
                double ych = ops.dot(L, kcol.data(), xrev.data());
                if (top.has_skip()) ych += top.d_skip[ch] * xs[static_cast<std::size_t>(L - 1) * d + ch];
                acc += ych;
            }
            out_.preds[i] = acc / d;
            const double err = out_.preds[i] - labels_[i];
            mse += err * err;
        }
        out_.mse = mse / x.n;
        for (double p : out_.penalties)
            if (!std::isfinite(p)) out_.finite = false;
        if (!std::isfinite(out_.mse)) out_.finite = false;
    }

    // Measure penalty pulled back to the kernel: stats act as constants, so
    // d tau / d k[j][ch] = (2 t_ch / d)(sign(k) sigma_rev + sign(mean_term) mu_rev).
    void add_penalty_adjoint(int layer_idx, std::vector<double>& big_g) {
        if (config_.lambda_reg == 0.0) return;
        const Regularizer reg = config_.regularizer;
        if (reg != Regularizer::Tau && reg != Regularizer::FilterNorm) return;
        const SSMLayerParams& layer = model_[layer_idx];
        const LayerEval& ev = layer_evals_[layer_idx];
        const MeasureParts& parts = reg == Regularizer::Tau ? ev.tau_parts : ev.filter_parts;
        const int L = ev.kernel.length;
        for (int ch = 0; ch < layer.d; ++ch) {
            const double t_ch = parts.abs_term[ch] + std::fabs(parts.mean_term[ch]);
            const double outer = config_.lambda_reg * 2.0 * t_ch / layer.d;
            if (outer == 0.0) continue;
            const double mean_sign = signum(parts.mean_term[ch]);
            for (int j = 0; j < L; ++j) {
                const double k = ev.kernel.at(j, ch);
                double dk = signum(k);
                double dmu = mean_sign;
                if (reg == Regularizer::Tau) {
                    dk *= std::sqrt(ev.stats.var_at(L - 1 - j, ch));
                    dmu *= ev.stats.mu_at(L - 1 - j, ch);
                } else {
                    dmu = 0.0;
                }
                big_g[static_cast<std::size_t>(j) * layer.d + ch] += outer * (dk + dmu);
            }
        }
    }

    void backward() {
        const int layers = static_cast<int>(model_.size());
        const Batch& data = inputs_[0];
        const int L = data.length;
        const int d = data.dim;
        const int n = data.n;
        out_.grads.resize(layers);
        for (int i = 0; i < layers; ++i) out_.grads[i] = zero_grads(model_[i]);

        // dL/dpred, spread uniformly over channels (prediction is the channel mean)
        std::vector<double> glast(n);
        for (int i = 0; i < n; ++i) glast[i] = 2.0 * (out_.preds[i] - labels_[i]) / (n * static_cast<double>(d));

        Batch gy_dense;  // set once we descend below the top layer
        for (int li = layers - 1; li >= 0; --li) {
            const SSMLayerParams& layer = model_[li];
            const LayerEval& ev = layer_evals_[li];
            LayerGrads& g = out_.grads[li];
            const Batch& x = inputs_[li];
            const bool top = (li == layers - 1);

            std::vector<double> big_g(static_cast<std::size_t>(L) * d, 0.0);
            const auto& ops = kern::active();
            if (top) {
                // gy concentrated at the last position
                std::vector<double> xrev(L);
                for (int i = 0; i < n; ++i) {
                    const double* xs = x.seq(i);
                    for (int ch = 0; ch < d; ++ch) {
                        for (int j = 0; j < L; ++j) xrev[j] = xs[static_cast<std::size_t>(L - 1 - j) * d + ch];
                        // big_g strided by d; accumulate via temp column
                        for (int j = 0; j < L; ++j)
                            big_g[static_cast<std::size_t>(j) * d + ch] += glast[i] * xrev[j];
                        if (layer.has_skip())
                            g.d_skip[ch] += glast[i] * xs[static_cast<std::size_t>(L - 1) * d + ch];
                    }
                }
            } else {
                std::vector<double> gycol(L), xcol(L);
                for (int ch = 0; ch < d; ++ch) {
                    for (int i = 0; i < n; ++i) {
                        const double* gys = gy_dense.seq(i);
                        const double* xs = x.seq(i);
                        for (int t = 0; t < L; ++t) {
                            gycol[t] = gys[static_cast<std::size_t>(t) * d + ch];
                            xcol[t] = xs[static_cast<std::size_t>(t) * d + ch];
                        }
                        const std::vector<double> gk = correlate_causal_fft(gycol, xcol);
                        for (int j = 0; j < L; ++j) big_g[static_cast<std::size_t>(j) * d + ch] += gk[j];
                        if (layer.has_skip()) g.d_skip[ch] += ops.dot(L, gycol.data(), xcol.data());
                    }
                }
            }

            add_penalty_adjoint(li, big_g);
            kernel_adjoint_to_params(layer, ev, big_g, g);
            if (config_.lambda_reg != 0.0 && config_.regularizer == Regularizer::WeightDecayA) {
                for (int nn = 0; nn < layer.m; ++nn) {
                    g.a_log_re[nn] += config_.lambda_reg * 2.0 * std::exp(2.0 * layer.a_log_re[nn]);
                    g.a_im[nn] += config_.lambda_reg * 2.0 * layer.a_im[nn];
                }
            }

            if (li > 0) {
                // build dense gy for the layer below
                if (top) {
                    Batch gy(n, L, d);
                    for (int ch = 0; ch < d; ++ch) {
                        const std::vector<double> kcol = ev.kernel.channel(ch);
                        for (int i = 0; i < n; ++i) {
                            double* gxs = gy.seq(i);
                            for (int s = 0; s < L; ++s)
                                gxs[static_cast<std::size_t>(s) * d + ch] = glast[i] * kcol[L - 1 - s];
                            if (layer.has_skip())
                                gxs[static_cast<std::size_t>(L - 1) * d + ch] += glast[i] * layer.d_skip[ch];
                        }
                    }
                    gy_dense = std::move(gy);
                } else {
                    gy_dense = propagate_gy_dense(layer, ev, gy_dense);
                }
            }
        }

        for (const auto& g : out_.grads) {
            if (!std::isfinite(g.squared_norm())) {
                out_.finite = false;
                break;
            }
        }
    }

    const std::vector<SSMLayerParams>& model_;
    const std::vector<double>& labels_;
    const TrainConfig& config_;
    std::vector<Batch> inputs_;
    std::vector<LayerEval> layer_evals_;
    Evaluation out_;
};

Evaluation evaluate(const std::vector<SSMLayerParams>& model, const Batch& batch, const std::vector<double>& labels,
                    const TrainConfig& config, bool want_grads) {
    require_trainable(model);
    Evaluator ev(model, batch, labels, config);
    return ev.run(want_grads);
}

void adam_update(std::vector<double>& p, const std::vector<double>& g, AdamSlot& slot, double lr, double wd,
                 int step) {
    if (p.empty()) return;
    if (slot.m1.size() != p.size()) {
        slot.m1.assign(p.size(), 0.0);
        slot.m2.assign(p.size(), 0.0);
    }
    const double bc1 = 1.0 - std::pow(kBeta1, step);
    const double bc2 = 1.0 - std::pow(kBeta2, step);
    for (std::size_t i = 0; i < p.size(); ++i) {
        slot.m1[i] = kBeta1 * slot.m1[i] + (1.0 - kBeta1) * g[i];
        slot.m2[i] = kBeta2 * slot.m2[i] + (1.0 - kBeta2) * g[i] * g[i];
        const double mhat = slot.m1[i] / bc1;
        const double vhat = slot.m2[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + kEps) + wd * p[i]);
    }
}

// The timescale is updated through its logarithm (moments live in log space)
// so delta stays strictly positive under unconstrained steps, matching the
// exponential parameterization of the state matrix.
void adam_update_log(std::vector<double>& p, const std::vector<double>& g, AdamSlot& slot, double lr, int step) {
    if (p.empty()) return;
    std::vector<double> logs(p.size()), glogs(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        logs[i] = std::log(p[i]);
        glogs[i] = g[i] * p[i];  // dL/dlog(delta) = dL/ddelta * delta
    }
    adam_update(logs, glogs, slot, lr, 0.0, step);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logs[i]);
}

}  // namespace

std::string regularizer_name(Regularizer r) {
    switch (r) {
        case Regularizer::Tau: return "tau";
        case Regularizer::FilterNorm: return "filter_norm";
        case Regularizer::WeightDecayA: return "weight_decay_a";
        case Regularizer::None: return "none";
    }
    return "?";
}

Regularizer regularizer_from_name(const std::string& name) {
    if (name == "tau") return Regularizer::Tau;
    if (name == "filter_norm") return Regularizer::FilterNorm;
    if (name == "weight_decay_a") return Regularizer::WeightDecayA;
    if (name == "none") return Regularizer::None;
    throw std::invalid_argument("unknown regularizer: " + name);
}

void TrainConfig::validate() const {
    if (lambda_reg < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (lr_main < 0.0 || lr_state < 0.0) throw std::invalid_argument("learning rates must be >= 0");
    if (weight_decay_c < 0.0) throw std::invalid_argument("weight decay must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 0) throw std::invalid_argument("batch size must be >= 0");
}

double LayerGrads::squared_norm() const {
    double acc = 0.0;
    for (const auto* v : {&a_log_re, &a_im, &b_re, &b_im, &c_re, &c_im, &d_skip, &delta})
        for (double x : *v) acc += x * x;
    return acc;
}

double RiskBreakdown::total() const {
    double acc = mse;
    for (double p : penalty_per_layer) acc += lambda * p;
    return acc;
}

double empirical_risk(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset) {
    if (dataset.inputs.n < 1) throw std::invalid_argument("dataset is empty");
    TrainConfig cfg;
    cfg.regularizer = Regularizer::None;
    return evaluate(model, dataset.inputs, dataset.labels, cfg, false).mse;
}

RiskBreakdown regularized_risk(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset,
                               const TrainConfig& config) {
    if (dataset.inputs.n < 1) throw std::invalid_argument("dataset is empty");
    const Evaluation ev = evaluate(model, dataset.inputs, dataset.labels, config, false);
    RiskBreakdown out;
    out.mse = ev.mse;
    out.lambda = config.lambda_reg;
    out.penalty_per_layer = ev.penalties;
    return out;
}

GradResult gradients(const std::vector<SSMLayerParams>& model, const SequenceDataset& dataset,
                     const TrainConfig& config) {
    if (dataset.inputs.n < 1) throw std::invalid_argument("dataset is empty");
    Evaluation ev = evaluate(model, dataset.inputs, dataset.labels, config, true);
    GradResult out;
    out.risk.mse = ev.mse;
    out.risk.lambda = config.lambda_reg;
    out.risk.penalty_per_layer = ev.penalties;
    out.grads = std::move(ev.grads);
    return out;
}

TrainState train(const SequenceDataset& train_set, const SequenceDataset& test_set, const TrainConfig& config,
                 std::vector<SSMLayerParams> model, const EpochCallback& on_epoch) {
    config.validate();
    require_trainable(model);
    const int n = train_set.inputs.n;
    if (n < 1) throw std::invalid_argument("training set is empty");

    TrainState st;
    st.model = std::move(model);
    st.moments.resize(st.model.size());

    std::mt19937_64 engine(config.seed);
    const int bs = (config.batch_size <= 0 || config.batch_size >= n) ? n : config.batch_size;
    std::vector<int> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    const int L = train_set.inputs.length;
    const int d = train_set.inputs.dim;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // one minibatch, one update per epoch
        Evaluation ev;
        try {
            if (bs == n) {
                ev = evaluate(st.model, train_set.inputs, train_set.labels, config, true);
            } else {
                std::shuffle(indices.begin(), indices.end(), engine);
                Batch mb(bs, L, d);
                std::vector<double> mb_labels(bs);
                for (int i = 0; i < bs; ++i) {
                    const double* src = train_set.inputs.seq(indices[i]);
                    std::copy(src, src + static_cast<std::size_t>(L) * d, mb.seq(i));
                    mb_labels[i] = train_set.labels[indices[i]];
                }
                ev = evaluate(st.model, mb, mb_labels, config, true);
            }
        } catch (const std::exception&) {
            // an update drove the parameters out of the valid region
            st.diverged = true;
            break;
        }

        if (!ev.finite) {
            st.diverged = true;
            break;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_mse = (bs == n) ? ev.mse : empirical_risk(st.model, train_set);
        rec.test_mse = test_set.inputs.n > 0 ? empirical_risk(st.model, test_set) : 0.0;
        rec.tau_total = 0.0;
        for (double t : ev.taus) rec.tau_total += t;
        double gsq = 0.0;
        for (const auto& g : ev.grads) gsq += g.squared_norm();
        rec.grad_norm = std::sqrt(gsq);

        const double factor =
            config.cosine_schedule ? 0.5 * (1.0 + std::cos(kPi * epoch / config.epochs)) : 1.0;
        rec.lr = config.lr_main * factor;
        st.history.push_back(rec);

        const int step = epoch + 1;
        for (std::size_t li = 0; li < st.model.size(); ++li) {
            SSMLayerParams& p = st.model[li];
            LayerGrads& g = ev.grads[li];
            LayerMoments& mom = st.moments[li];
            const double lr_state = config.lr_state * factor;
            const double lr_main = config.lr_main * factor;
            adam_update(p.a_log_re, g.a_log_re, mom.a_log_re, lr_state, 0.0, step);
            adam_update(p.a_im, g.a_im, mom.a_im, lr_state, 0.0, step);
            adam_update(p.b_re, g.b_re, mom.b_re, lr_state, 0.0, step);
            adam_update(p.b_im, g.b_im, mom.b_im, lr_state, 0.0, step);
            adam_update_log(p.delta, g.delta, mom.delta, lr_state, step);
            adam_update(p.c_re, g.c_re, mom.c_re, lr_main, config.weight_decay_c, step);
            adam_update(p.c_im, g.c_im, mom.c_im, lr_main, config.weight_decay_c, step);
            if (p.has_skip()) adam_update(p.d_skip, g.d_skip, mom.d_skip, lr_main, config.weight_decay_c, step);
        }
        st.epoch = epoch + 1;
        if (on_epoch) on_epoch(st);
    }
    return st;
}

}  // namespace ssmgen
