#include "ssmgen/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <optional>

#include "ssmgen/experiment.hpp"
#include "ssmgen/kern.hpp"
#include "ssmgen/serialize.hpp"

namespace ssmgen::cli {
namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::string profile = "fast";
    std::string out_dir = "out";
    std::string simd = "auto";
    std::optional<std::uint64_t> seed;
};

json load_config(const CommonArgs& args) {
    if (args.config_path.empty()) return json::object();
    return json::parse(read_file(args.config_path));
}

ProcessSpec process_from_config(const json& cfg, std::optional<std::uint64_t> seed_override) {
    ProcessSpec spec;
    spec.kind = ProcessKind::GaussianWhiteNoise;
    if (cfg.contains("process")) {
        const json& p = cfg.at("process");
        if (p.contains("kind")) spec.kind = process_kind_from_name(p.at("kind").get<std::string>());
        if (p.contains("b")) spec.bandwidth = p.at("b").get<double>();
        if (p.contains("mean")) spec.mean = p.at("mean").get<double>();
        if (p.contains("length")) spec.length = p.at("length").get<int>();
        if (p.contains("dim")) spec.dim = p.at("dim").get<int>();
        if (p.contains("seed")) spec.seed = p.at("seed").get<std::uint64_t>();
    }
    if (seed_override) spec.seed = *seed_override;
    return spec;
}

InitConfig init_from_config(const json& cfg, std::optional<std::uint64_t> seed_override) {
    InitConfig init;
    if (cfg.contains("model")) {
        const json& m = cfg.at("model");
        if (m.contains("kind")) init.kind = init_kind_from_name(m.at("kind").get<std::string>());
        if (m.contains("m")) init.m = m.at("m").get<int>();
        if (m.contains("d")) init.d = m.at("d").get<int>();
        if (m.contains("layers")) init.layers = m.at("layers").get<int>();
        if (m.contains("delta_min")) init.delta_min = m.at("delta_min").get<double>();
        if (m.contains("delta_max")) init.delta_max = m.at("delta_max").get<double>();
        if (m.contains("seed")) init.seed = m.at("seed").get<std::uint64_t>();
    }
    if (seed_override) init.seed = *seed_override;
    return init;
}

TrainConfig train_from_config(const json& cfg, std::optional<std::uint64_t> seed_override) {
    TrainConfig tc;
    if (cfg.contains("train")) {
        const json& t = cfg.at("train");
        if (t.contains("lambda")) tc.lambda_reg = t.at("lambda").get<double>();
        if (t.contains("regularizer")) tc.regularizer = regularizer_from_name(t.at("regularizer").get<std::string>());
        if (t.contains("lr_main")) tc.lr_main = t.at("lr_main").get<double>();
        if (t.contains("lr_state")) tc.lr_state = t.at("lr_state").get<double>();
        if (t.contains("weight_decay_c")) tc.weight_decay_c = t.at("weight_decay_c").get<double>();
        if (t.contains("epochs")) tc.epochs = t.at("epochs").get<int>();
        if (t.contains("batch_size")) tc.batch_size = t.at("batch_size").get<int>();
        if (t.contains("cosine")) tc.cosine_schedule = t.at("cosine").get<bool>();
        if (t.contains("seed")) tc.seed = t.at("seed").get<std::uint64_t>();
    }
    if (seed_override) tc.seed = *seed_override;
    return tc;
}

ExperimentPlan plan_from_args(const CommonArgs& args, const json& cfg) {
    ExperimentPlan plan = make_plan(args.profile);
    if (cfg.contains("plan")) apply_plan_overrides(plan, cfg.at("plan"));
    if (args.seed) plan.seed = *args.seed;
    return plan;
}

int cmd_generate(const CommonArgs& args, int n) {
    const json cfg = load_config(args);
    const ProcessSpec spec = process_from_config(cfg, args.seed);
    if (cfg.contains("process") && cfg.at("process").contains("n") && n == 0)
        n = cfg.at("process").at("n").get<int>();
    if (n <= 0) n = 100;
    const SequenceDataset ds = sample_batch(spec, n);
    save_dataset(ds, args.out_dir);
    std::printf("wrote %d sequences (L=%d, d=%d) to %s\n", n, spec.length, spec.dim, args.out_dir.c_str());
    return 0;
}

int cmd_measure(const CommonArgs& args, const std::string& model_path, const std::string& data_dir) {
    const auto model = load_model(model_path);
    const SequenceDataset ds = load_dataset(data_dir);
    const MeasureReport report = measure_report(model, ds);
    std::filesystem::create_directories(args.out_dir);
    const std::string out = report_to_json(report).dump(2) + "\n";
    write_file(args.out_dir + "/measure.json", out);
    std::fputs(out.c_str(), stdout);
    return 0;
}

int cmd_rescale(const CommonArgs& args, const std::string& model_path, const std::string& data_dir) {
    const auto model = load_model(model_path);
    const SequenceDataset ds = load_dataset(data_dir);
    const RescaleResult res = rescale_all_layers(model, ds.inputs);
    std::filesystem::create_directories(args.out_dir);
    save_model(res.model, args.out_dir + "/model.json");
    json trace;
    trace["tau_trace"] = res.tau_trace;
    write_file(args.out_dir + "/rescale.json", trace.dump(2) + "\n");
    std::printf("rescaled %zu layer(s); wrote %s/model.json\n", res.model.size(), args.out_dir.c_str());
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& data_dir, const std::string& test_dir,
              const std::string& model_path, int checkpoint_every) {
    const json cfg = load_config(args);
    const SequenceDataset train_set = load_dataset(data_dir);
    SequenceDataset test_set;
    if (!test_dir.empty()) test_set = load_dataset(test_dir);

    std::vector<SSMLayerParams> model;
    if (!model_path.empty()) {
        model = load_model(model_path);
    } else {
        InitConfig init = init_from_config(cfg, std::nullopt);
        if (init.m == 0) init.m = 64;
        init.d = train_set.inputs.dim;
        model = init_hippo(init);
    }
    const TrainConfig tc = train_from_config(cfg, args.seed);

    std::filesystem::create_directories(args.out_dir);
    std::string metrics = std::string(schema::kMetrics) + "\n";

    const EpochCallback on_epoch = [&](const TrainState& st) {
        const EpochRecord& rec = st.history.back();
        metrics += std::to_string(rec.epoch) + "," + format_double(rec.train_mse) + "," +
                   format_double(rec.test_mse) + "," + format_double(rec.tau_total) + "," +
                   format_double(rec.grad_norm) + "," + format_double(rec.lr) + "\n";
        if (checkpoint_every > 0 && st.epoch % checkpoint_every == 0) {
            json ck = model_to_json(st.model);
            ck["epoch"] = st.epoch;
            json moments = json::array();
            for (const auto& lm : st.moments) {
                json slot;
                slot["c_re_m1"] = lm.c_re.m1;
                slot["c_re_m2"] = lm.c_re.m2;
                slot["c_im_m1"] = lm.c_im.m1;
                slot["c_im_m2"] = lm.c_im.m2;
                slot["a_log_re_m1"] = lm.a_log_re.m1;
                slot["a_log_re_m2"] = lm.a_log_re.m2;
                slot["a_im_m1"] = lm.a_im.m1;
                slot["a_im_m2"] = lm.a_im.m2;
                slot["b_re_m1"] = lm.b_re.m1;
                slot["b_re_m2"] = lm.b_re.m2;
                slot["b_im_m1"] = lm.b_im.m1;
                slot["b_im_m2"] = lm.b_im.m2;
                slot["delta_m1"] = lm.delta.m1;
                slot["delta_m2"] = lm.delta.m2;
                slot["d_skip_m1"] = lm.d_skip.m1;
                slot["d_skip_m2"] = lm.d_skip.m2;
                moments.push_back(slot);
            }
            ck["moments"] = moments;
            write_file(args.out_dir + "/checkpoint_" + std::to_string(st.epoch) + ".json", ck.dump() + "\n");
        }
    };

    const TrainState st = train(train_set, test_set, tc, std::move(model), on_epoch);
    write_file(args.out_dir + "/metrics.csv", metrics);
    save_model(st.model, args.out_dir + "/model.json");

    json result;
    result["epochs_run"] = st.epoch;
    result["diverged"] = st.diverged;
    if (!st.history.empty()) {
        result["final_train_mse"] = st.history.back().train_mse;
        result["final_test_mse"] = st.history.back().test_mse;
    }
    write_file(args.out_dir + "/result.json", result.dump(2) + "\n");

    if (st.diverged) {
        std::fprintf(stderr, "training diverged at epoch %d\n", st.epoch);
        return 2;
    }
    std::printf("trained %d epoch(s); outputs in %s\n", st.epoch, args.out_dir.c_str());
    return 0;
}

int cmd_matrix(const CommonArgs& args) {
    const json cfg = load_config(args);
    const ExperimentPlan plan = plan_from_args(args, cfg);
    const MatrixResult result = run_matrix(plan);
    write_matrix_outputs(result, plan, args.out_dir);
    bool any_diverged = false;
    for (const auto& cell : result.cells) any_diverged |= cell.diverged;
    std::printf("matrix: %zu cells -> %s\n", result.cells.size(), args.out_dir.c_str());
    return any_diverged ? 2 : 0;
}

int cmd_prop1(const CommonArgs& args) {
    const json cfg = load_config(args);
    const ExperimentPlan plan = plan_from_args(args, cfg);
    const auto rows = prop1_sweep(plan);
    write_prop1_outputs(rows, plan, args.out_dir);
    std::printf("output-scale sweep: %zu rows -> %s\n", rows.size(), args.out_dir.c_str());
    return 0;
}

int cmd_padding(const CommonArgs& args, const std::string& model_path) {
    const json cfg = load_config(args);
    std::vector<double> horizons{5.0, 10.0, 20.0, 40.0};
    if (cfg.contains("padding") && cfg.at("padding").contains("horizons"))
        horizons = cfg.at("padding").at("horizons").get<std::vector<double>>();

    SSMLayerParams params;
    if (!model_path.empty()) {
        params = load_model(model_path).at(0);
    } else {
        // scalar A = -1, B = C = 1 shows the closed-form decay
        params.repr = Repr::Diag;
        params.m = 1;
        params.d = 1;
        params.a_log_re = {0.0};
        params.a_im = {0.0};
        params.b_re = {1.0};
        params.b_im = {0.0};
        params.c_re = {1.0};
        params.c_im = {0.0};
        params.delta = {1e-2};
    }
    ProcessSpec process = process_from_config(cfg, std::nullopt);
    const auto rows = padding_demo(params, process, horizons);
    json config = cfg;
    config["horizons"] = horizons;
    write_padding_outputs(rows, config, args.out_dir);
    for (const auto& r : rows)
        std::printf("T=%-6g left=%.10g right=%.10g\n", r.horizon, r.left, r.right);
    return 0;
}

int cmd_transfer(const CommonArgs& args, const std::string& model_path, double factor) {
    const json cfg = load_config(args);
    SSMLayerParams params;
    if (!model_path.empty()) {
        params = load_model(model_path).at(0);
    } else {
        InitConfig init = init_from_config(cfg, args.seed);
        if (init.m == 0) init.m = 8;
        init.delta_min = 4.9e-5;
        init.delta_max = 5.1e-5;
        params = init_hippo(init).at(0);
        for (auto& dt : params.delta) dt = 5e-5;
    }
    ProcessSpec process = process_from_config(cfg, std::nullopt);
    const TransferReport report = transfer_demo(params, process, factor);
    json config = cfg;
    config["factor"] = factor;
    write_transfer_outputs(report, config, args.out_dir);
    std::printf("factor=%g output_max_dev=%.3e measure_rel_dev=%.3e\n", report.factor, report.output_max_dev,
                report.measure_rel_dev);
    return 0;
}

int cmd_report(const CommonArgs& args, const std::string& results_path) {
    const MatrixResult result = read_matrix_results(results_path);
    std::filesystem::create_directories(args.out_dir);
    const auto rows = summarize(result);
    write_summary_csv(rows, args.out_dir + "/summary.csv");
    std::printf("%-8s %-16s %-10s %-10s %-10s\n", "b", "arm", "train", "test", "psi2/sqrt(n)");
    for (const auto& r : rows)
        std::printf("%-8g %-16s %-10.4f %-10.4f %-10.4f\n", r.b, arm_name(r.arm).c_str(), r.train_mean,
                    r.test_mean, r.psi_mean);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"linear SSM sequence models with a data-dependent generalization measure"};
    app.require_subcommand(1);

    CommonArgs args;
    app.add_option("--config", args.config_path, "JSON config file");
    app.add_option("--profile", args.profile, "experiment profile: paper | fast")->default_val("fast");
    app.add_option("--out", args.out_dir, "output directory")->default_val("out");
    app.add_option("--simd", args.simd, "kernel backend: auto | scalar | avx2")->default_val("auto");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "seed override");

    auto* generate = app.add_subcommand("generate", "sample a dataset to disk");
    int gen_n = 0;
    generate->add_option("-n,--n", gen_n, "number of sequences");

    auto* measure = app.add_subcommand("measure", "generalization-measure report for model + data");
    std::string measure_model, measure_data;
    measure->add_option("--model", measure_model, "model JSON")->required();
    measure->add_option("--data", measure_data, "dataset directory")->required();

    auto* rescale = app.add_subcommand("rescale", "measure-normalizing rescale over a checkpoint");
    std::string rescale_model, rescale_data;
    rescale->add_option("--model", rescale_model, "model JSON")->required();
    rescale->add_option("--data", rescale_data, "dataset directory")->required();

    auto* train_cmd = app.add_subcommand("train", "run the training loop");
    std::string train_data, train_test, train_model;
    int checkpoint_every = 0;
    train_cmd->add_option("--data", train_data, "training dataset directory")->required();
    train_cmd->add_option("--test", train_test, "test dataset directory");
    train_cmd->add_option("--model", train_model, "initial model JSON (default: init from config)");
    train_cmd->add_option("--checkpoint-every", checkpoint_every, "write a checkpoint every k epochs");

    auto* matrix = app.add_subcommand("matrix", "run the b x arm experiment matrix");
    auto* prop1 = app.add_subcommand("prop1", "output-scale sweep at initialization");

    auto* padding = app.add_subcommand("padding", "left/right zero-padding measure table");
    std::string padding_model;
    padding->add_option("--model", padding_model, "model JSON (default: scalar A=-1)");

    auto* transfer = app.add_subcommand("transfer", "sampling-frequency transfer check");
    std::string transfer_model;
    double transfer_factor = 2.0;
    transfer->add_option("--model", transfer_model, "model JSON (default: seeded diagonal init)");
    transfer->add_option("--factor", transfer_factor, "frequency ratio")->default_val(2.0);

    auto* report = app.add_subcommand("report", "aggregate a results.csv into a summary table");
    std::string report_in;
    report->add_option("--in", report_in, "results.csv path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (seed_opt->count() > 0) args.seed = seed_value;

    try {
        kern::force_backend(args.simd);
        if (generate->parsed()) return cmd_generate(args, gen_n);
        if (measure->parsed()) return cmd_measure(args, measure_model, measure_data);
        if (rescale->parsed()) return cmd_rescale(args, rescale_model, rescale_data);
        if (train_cmd->parsed()) return cmd_train(args, train_data, train_test, train_model, checkpoint_every);
        if (matrix->parsed()) return cmd_matrix(args);
        if (prop1->parsed()) return cmd_prop1(args);
        if (padding->parsed()) return cmd_padding(args, padding_model);
        if (transfer->parsed()) return cmd_transfer(args, transfer_model, transfer_factor);
        if (report->parsed()) return cmd_report(args, report_in);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}

}  // namespace ssmgen::cli
