#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "ssmgen/cli.hpp"
#include "ssmgen/experiment.hpp"
#include "ssmgen/fft.hpp"
#include "ssmgen/serialize.hpp"

// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line. Tolerances are pinned in code, not configurable.

using namespace ssmgen;

namespace {

struct Criterion {
    int index;
    const char* name;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    void report(bool ok) const {
        std::printf("[criterion %d] %-34s %s  (%.2fs)\n", index, name, ok ? "PASS" : "FAIL", elapsed());
        std::fflush(stdout);
        CHECK_MESSAGE(ok, "criterion ", index, " failed: ", name);
    }
};

SequenceStats random_stats(std::uint64_t seed, int length, int d) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SequenceStats s;
    s.length = length;
    s.d = d;
    s.mu.resize(static_cast<std::size_t>(length) * d);
    s.var.resize(s.mu.size());
    for (auto& v : s.mu) v = normal(engine);
    for (auto& v : s.var) v = std::fabs(normal(engine));
    return s;
}

Batch random_batch(std::uint64_t seed, int n, int length, int d = 1) {
    Batch b(n, length, d);
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(1.0, 1.0);
    for (auto& v : b.data) v = normal(engine);
    return b;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("ssmgen");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("criterion 1: quadratic scaling of the measure") {
    Criterion cr{1, "quadratic scaling tau(xi C)"};
    bool ok = true;
    for (int rep = 0; rep < 200; ++rep) {
        const int m = 1 + rep % 8;
        const int d = 1 + rep % 2;
        const int L = 4 + rep % 24;
        const auto p = oracle::random_diag_params(10000 + rep, m, d);
        const auto stats = random_stats(20000 + rep, L, d);
        const double base = discrete_measure(compute_kernel(p, L), stats);
        for (double xi : {-2.0, 0.5, 3.0}) {
            auto q = p;
            scale_c(q, xi);
            const double scaled = discrete_measure(compute_kernel(q, L), stats);
            ok &= std::fabs(scaled - xi * xi * base) <= 1e-12 * std::max(std::fabs(scaled), 1e-12);
        }
    }
    ok &= cr.elapsed() < 1.0;
    cr.report(ok);
}

TEST_CASE("criterion 2: post-rescale measure is one") {
    Criterion cr{2, "rescaled tau = 1 +- 1e-10"};
    bool ok = true;
    // one-layer models, with and without skip weights
    for (int rep = 0; rep < 5; ++rep) {
        const auto p = oracle::random_diag_params(30000 + rep, 2 + rep, 1 + rep % 2, rep % 2 == 1);
        const Batch batch = random_batch(31000 + rep, 8, 12 + rep);
        Batch wide(batch.n, batch.length, p.d);
        for (int i = 0; i < batch.n; ++i)
            for (int t = 0; t < batch.length; ++t)
                for (int ch = 0; ch < p.d; ++ch) wide.at(i, t, ch) = batch.at(i, t, 0);
        const auto res = rescale_all_layers({p}, wide);
        const auto taus = layer_measures(res.model, wide);
        ok &= std::fabs(taus[0] - 1.0) <= 1e-10;
        if (p.has_skip()) {
            const double ts = skip_measure(res.model[0], compute_stats(wide));
            ok &= std::fabs(ts - 1.0) <= 1e-10;
        }
    }
    // two-layer models
    for (int rep = 0; rep < 5; ++rep) {
        const std::vector<SSMLayerParams> model{oracle::random_diag_params(32000 + rep, 3 + rep % 3),
                                                oracle::random_diag_params(33000 + rep, 2 + rep % 4)};
        const Batch batch = random_batch(34000 + rep, 8, 16);
        const auto res = rescale_all_layers(model, batch);
        const auto taus = layer_measures(res.model, batch);
        for (double t : taus) ok &= std::fabs(t - 1.0) <= 1e-10;
    }
    ok &= cr.elapsed() < 5.0;
    cr.report(ok);
}

TEST_CASE("criterion 3: gradients match finite differences") {
    Criterion cr{3, "analytic vs central differences"};
    const int ms[] = {2, 4, 8};
    const int ls[] = {8, 16, 32};
    const double lambdas[] = {0.0, 0.01, 0.1};
    const Regularizer regs[] = {Regularizer::Tau, Regularizer::FilterNorm, Regularizer::WeightDecayA,
                                Regularizer::None};
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int m = ms[i % 3];
        const int L = ls[(i / 3) % 3];
        TrainConfig cfg;
        cfg.lambda_reg = lambdas[(i / 9) % 3];
        cfg.regularizer = regs[i % 4];

        ProcessSpec spec;
        spec.kind = ProcessKind::GaussianWhiteNoise;
        spec.bandwidth = 1.0;
        spec.mean = 1.0;
        spec.length = L;
        spec.seed = 40000 + i;
        const SequenceDataset ds = sample_batch(spec, 4);
        const std::vector<SSMLayerParams> model{oracle::random_diag_params(41000 + i, m, 1, i % 2 == 1)};

        const auto analytic_grads = gradients(model, ds, cfg).grads[0];
        std::vector<double> analytic;
        for (const auto* v : {&analytic_grads.a_log_re, &analytic_grads.a_im, &analytic_grads.b_re,
                              &analytic_grads.b_im, &analytic_grads.c_re, &analytic_grads.c_im,
                              &analytic_grads.d_skip, &analytic_grads.delta})
            analytic.insert(analytic.end(), v->begin(), v->end());

        auto shape = model;
        const auto unpack = [&](const std::vector<double>& theta) {
            auto mm = shape;
            std::size_t k = 0;
            for (auto* v : {&mm[0].a_log_re, &mm[0].a_im, &mm[0].b_re, &mm[0].b_im, &mm[0].c_re, &mm[0].c_im,
                            &mm[0].d_skip, &mm[0].delta})
                for (auto& x : *v) x = theta[k++];
            return mm;
        };
        std::vector<double> theta0;
        for (const auto* v : {&model[0].a_log_re, &model[0].a_im, &model[0].b_re, &model[0].b_im, &model[0].c_re,
                              &model[0].c_im, &model[0].d_skip, &model[0].delta})
            theta0.insert(theta0.end(), v->begin(), v->end());

        const auto objective = [&](const std::vector<double>& theta) {
            return regularized_risk(unpack(theta), ds, cfg).total();
        };
        const auto numeric = oracle::central_diff(objective, theta0, 1e-5);

        double scale = 1e-8, err = 0.0;
        for (double v : numeric) scale = std::max(scale, std::fabs(v));
        for (std::size_t k = 0; k < numeric.size(); ++k) err = std::max(err, std::fabs(numeric[k] - analytic[k]));
        worst = std::max(worst, err / scale);
    }
    std::printf("  max relative gradient error over 50 configs: %.3e\n", worst);
    bool ok = worst < 1e-4;
    ok &= cr.elapsed() < 120.0;
    cr.report(ok);
}

TEST_CASE("criterion 4: oracle equivalences") {
    Criterion cr{4, "fft/direct, tau/double-sum, diag/dense"};
    bool ok = true;
    std::mt19937_64 engine(50000);
    std::normal_distribution<double> normal(0.0, 1.0);

    // fft convolution vs direct sum, all lengths 1..128
    for (int L = 1; L <= 128; ++L) {
        std::vector<double> k(L), x(L);
        for (auto& v : k) v = normal(engine);
        for (auto& v : x) v = normal(engine);
        const auto fast = conv_causal_fft(k, x);
        const auto slow = oracle::direct_conv(k, x);
        for (int t = 0; t < L; ++t) ok &= std::fabs(fast[t] - slow[t]) < 1e-9;
    }

    // discrete measure vs the independent double-sum
    for (int rep = 0; rep < 40; ++rep) {
        const int L = 1 + static_cast<int>(engine() % 64);
        const int d = 1 + rep % 2;
        const auto p = oracle::random_diag_params(51000 + rep, 2 + rep % 6, d);
        const auto stats = random_stats(52000 + rep, L, d);
        const auto kernel = compute_kernel(p, L);
        const double fast = discrete_measure(kernel, stats);
        const double slow = oracle::double_sum_measure(kernel.values, L, d, stats.mu, stats.var);
        ok &= std::fabs(fast - slow) <= 1e-10 * std::max({std::fabs(fast), std::fabs(slow), 1e-12});
    }

    // diagonal elementwise-power kernel vs dense-matrix repeated powers
    for (int rep = 0; rep < 10; ++rep) {
        const auto p = oracle::random_diag_params(53000 + rep, 8);
        const auto kernel = compute_kernel(p, 64);
        const auto dense = oracle::dense_power_kernel(p, 64, 0);
        double scale = 1e-12;
        for (int j = 0; j < 64; ++j) scale = std::max(scale, std::fabs(dense[j]));
        for (int j = 0; j < 64; ++j) ok &= std::fabs(kernel.at(j, 0) - dense[j]) <= 1e-10 * scale;
    }
    ok &= cr.elapsed() < 30.0;
    cr.report(ok);
}

TEST_CASE("criterion 5: padding contrast") {
    Criterion cr{5, "right-pad below left-pad, exp decay"};
    bool ok = true;
    const ScalarFn mean_fn = [](double) { return 1.0; };
    const ScalarFn var_fn = [](double) { return 0.5641895835477563; };  // white noise, b = 1

    // seeded stable models, diagonal and full
    for (int rep = 0; rep < 8; ++rep) {
        const auto p = oracle::random_diag_params(60000 + rep, 4 + rep % 5);
        const auto [left, right] = padding_measures(p, mean_fn, var_fn, 10.0);
        ok &= right < left;
    }
    for (int rep = 0; rep < 2; ++rep) {
        InitConfig cfg;
        cfg.kind = InitKind::LegsFull;
        cfg.m = 8;
        cfg.seed = 61000 + rep;
        const auto p = init_hippo(cfg)[0];
        const auto [left, right] = padding_measures(p, mean_fn, var_fn, 10.0);
        ok &= right < left;
    }

    // scalar A = -1: closed-form factor exp(-T), monotone decay to 1
    SSMLayerParams scalar;
    scalar.repr = Repr::Diag;
    scalar.m = 1;
    scalar.d = 1;
    scalar.a_log_re = {0.0};
    scalar.a_im = {0.0};
    scalar.b_re = {1.0};
    scalar.b_im = {0.0};
    scalar.c_re = {1.0};
    scalar.c_im = {0.0};
    scalar.delta = {0.01};
    double prev_right = std::numeric_limits<double>::infinity();
    for (double T : {5.0, 10.0, 20.0, 40.0}) {
        const auto [left, right] = padding_measures(scalar, mean_fn, var_fn, T);
        ok &= std::fabs((right - 1.0) - std::exp(-T) * (left - 1.0)) <= 1e-8;
        ok &= right < prev_right;
        ok &= right >= 1.0;
        prev_right = right;
    }
    ok &= std::fabs(prev_right - 1.0) < 1e-8;
    ok &= cr.elapsed() < 10.0;
    cr.report(ok);
}

TEST_CASE("criterion 6: zero-shot sampling-frequency transfer") {
    Criterion cr{6, "output < 1e-3, measure < 1e-6"};
    bool ok = true;

    InitConfig cfg;
    cfg.kind = InitKind::LegsDiag;
    cfg.m = 8;
    cfg.seed = 2;
    auto params = init_hippo(cfg)[0];
    for (auto& dt : params.delta) dt = 5e-5;  // fine grid

    ProcessSpec process;
    process.kind = ProcessKind::GaussianWhiteNoise;
    process.bandwidth = 1.0;
    process.mean = 1.0;
    process.length = 1;

    const TransferReport report = transfer_demo(params, process, 2.0);
    std::printf("  output max deviation %.3e, measure relative deviation %.3e\n", report.output_max_dev,
                report.measure_rel_dev);
    ok &= report.output_max_dev < 1e-3;
    ok &= report.measure_rel_dev < 1e-6;

    const TransferReport ident = transfer_demo(params, process, 1.0);
    ok &= ident.output_max_dev == 0.0;
    ok &= ident.measure_rel_dev == 0.0;

    ok &= cr.elapsed() < 10.0;
    cr.report(ok);
}

TEST_CASE("criterion 7: output-scale sweep at initialization") {
    Criterion cr{7, "spread > 10x raw, < 3x rescaled"};
    ExperimentPlan plan = make_plan("fast");
    plan.seed = 12;
    const auto rows = prop1_sweep(plan);

    const auto value = [&](double b, int L, bool rescaled) {
        for (const auto& r : rows)
            if (r.b == b && r.length == L && r.rescaled == rescaled) return r.mean_abs_output;
        REQUIRE(false);
        return 0.0;
    };

    bool ok = true;
    double raw_max = 0.0, raw_min = 1e300, re_max = 0.0, re_min = 1e300;
    for (double b : plan.b_values) {
        const double raw = value(b, 1000, false);
        const double re = value(b, 1000, true);
        raw_max = std::max(raw_max, raw);
        raw_min = std::min(raw_min, raw);
        re_max = std::max(re_max, re);
        re_min = std::min(re_min, re);
    }
    std::printf("  spread at L=1000: unrescaled %.2fx, rescaled %.2fx\n", raw_max / raw_min, re_max / re_min);
    ok &= raw_max / raw_min > 10.0;
    ok &= re_max / re_min < 3.0;

    // rescaled curves stay below 10 sqrt(log L); the L=1 bound is vacuous
    // (log 1 = 0), the degenerate case only has to produce a finite value
    for (const auto& r : rows) {
        ok &= std::isfinite(r.mean_abs_output);
        if (r.rescaled && r.length >= 2) ok &= r.mean_abs_output < 10.0 * std::sqrt(std::log(r.length));
        if (r.rescaled) ok &= r.mean_abs_output < 10.0 * std::sqrt(std::log(1000.0));
    }
    ok &= cr.elapsed() < 120.0;
    cr.report(ok);
}

TEST_CASE("criterion 8: experiment matrix orderings") {
    Criterion cr{8, "table orderings at fast profile"};
    ExperimentPlan plan = make_plan("fast");
    plan.seed = 0;
    const MatrixResult result = run_matrix(plan);
    const auto rows = summarize(result);

    const auto cell = [&](double b, Arm arm) -> const SummaryRow& {
        for (const auto& r : rows)
            if (r.b == b && r.arm == arm) return r;
        REQUIRE(false);
        return rows[0];
    };

    bool ok = true;
    for (const auto& r : rows) ok &= r.n_seeds == plan.repeats;  // no divergent cells

    // (a) baseline test loss grows as temporal dependence weakens
    const double base1 = cell(1.0, Arm::Baseline).test_mean;
    const double base01 = cell(0.1, Arm::Baseline).test_mean;
    const double base001 = cell(0.01, Arm::Baseline).test_mean;
    std::printf("  baseline test: %.3f -> %.3f -> %.3f\n", base1, base01, base001);
    ok &= base1 < base01 && base01 < base001;

    // (b) rescaling cuts the b=0.01 test loss by at least 2x
    const double resc001 = cell(0.01, Arm::RescaleOnly).test_mean;
    std::printf("  b=0.01: baseline %.3f vs rescale %.3f (%.1fx)\n", base001, resc001, base001 / resc001);
    ok &= resc001 * 2.0 <= base001;

    // (c) rescale+regularize attains the lowest b=0.01 test loss
    const double both001 = cell(0.01, Arm::RescaleAndReg).test_mean;
    ok &= both001 < base001;
    ok &= both001 < resc001;
    ok &= both001 < cell(0.01, Arm::RegOnly).test_mean;

    // (d) measure and test loss are positively rank-correlated across b
    for (Arm arm : plan.arms) {
        int concordant = 0, discordant = 0;
        for (std::size_t i = 0; i < plan.b_values.size(); ++i) {
            for (std::size_t j = i + 1; j < plan.b_values.size(); ++j) {
                const auto& ri = cell(plan.b_values[i], arm);
                const auto& rj = cell(plan.b_values[j], arm);
                const double dt = ri.test_mean - rj.test_mean;
                const double dp = ri.psi_mean - rj.psi_mean;
                if (dt * dp > 0) ++concordant;
                if (dt * dp < 0) ++discordant;
            }
        }
        std::printf("  %s: measure/test concordance %d-%d\n", arm_name(arm).c_str(), concordant, discordant);
        ok &= concordant > discordant;
    }
    ok &= cr.elapsed() < 1200.0;
    cr.report(ok);
}

TEST_CASE("criterion 9: byte-identical outputs") {
    Criterion cr{9, "determinism of emitted files"};
    bool ok = true;
    const std::string root = "/tmp/ssmgen_acceptance_det";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);

    const std::string cfg_path = root + "/config.json";
    write_file(cfg_path, R"({
      "process": {"kind": "gaussian_white_noise", "b": 0.1, "mean": 1.0, "length": 24, "dim": 1, "seed": 11},
      "model": {"kind": "legs_diag", "m": 6, "seed": 12},
      "train": {"lambda": 0.01, "regularizer": "tau", "epochs": 4, "seed": 13},
      "plan": {"b_values": [1.0], "arms": ["baseline", "rescale_and_reg"], "repeats": 2,
               "length": 16, "m": 4, "epochs": 3, "n_train": 10, "n_test": 12,
               "lengths": [1, 4, 16], "sweep_m": 4, "sweep_batch": 16}
    })");

    const auto run_all = [&](const std::string& sub) {
        const std::string base = root + "/" + sub;
        ok &= run_cli({"--config", cfg_path, "--out", base + "/data", "generate", "-n", "10"}) == 0;
        ok &= run_cli({"--config", cfg_path, "--out", base + "/test", "--seed", "14", "generate", "-n", "8"}) == 0;
        ok &= run_cli({"--config", cfg_path, "--out", base + "/run", "train", "--data", base + "/data", "--test",
                       base + "/test"}) == 0;
        ok &= run_cli({"--out", base + "/measure", "measure", "--model", base + "/run/model.json", "--data",
                       base + "/data"}) == 0;
        ok &= run_cli({"--config", cfg_path, "--out", base + "/matrix", "matrix"}) == 0;
        ok &= run_cli({"--config", cfg_path, "--out", base + "/prop1", "prop1"}) == 0;
        ok &= run_cli({"--out", base + "/padding", "padding"}) == 0;
        ok &= run_cli({"--seed", "2", "--out", base + "/transfer", "transfer", "--factor", "2"}) == 0;
    };
    run_all("a");
    run_all("b");

    const char* files[] = {
        "data/data.csv",       "data/meta.json",        "test/data.csv",     "run/metrics.csv",
        "run/model.json",      "run/result.json",       "measure/measure.json", "matrix/results.csv",
        "matrix/summary.csv",  "matrix/meta.json",      "prop1/curve.csv",   "prop1/meta.json",
        "padding/padding.csv", "transfer/transfer.csv",
    };
    for (const char* f : files) {
        const bool same = read_file(root + "/a/" + f) == read_file(root + "/b/" + f);
        if (!same) std::printf("  mismatch: %s\n", f);
        ok &= same;
    }
    std::filesystem::remove_all(root);
    cr.report(ok);
}
