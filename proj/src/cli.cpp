#include "thzq/cli.hpp"

#include "thzq/error.hpp"
#include "thzq/gradcheck.hpp"
#include "thzq/io.hpp"
#include "thzq/pipeline.hpp"
#include "thzq/synth.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

namespace thzq {

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

const std::map<std::string, ModelKind> kModelNames{{"intensity", ModelKind::Intensity},
                                                   {"logreg", ModelKind::LogReg},
                                                   {"dnn", ModelKind::Dnn},
                                                   {"qml-dnn", ModelKind::QmlDnn}};

const std::map<std::string, Split> kSplitNames{
    {"train", Split::Train}, {"valid", Split::Valid}, {"test", Split::Test}};

std::size_t resolve_threads(std::optional<std::size_t> flag) {
    if (flag) {
        return *flag;
    }
    if (const char *env = std::getenv("THZQ_THREADS"); env != nullptr && *env != '\0') {
        try {
            const auto v = std::stoul(env);
            if (v >= 1) {
                return v;
            }
        } catch (const std::exception &) {
        }
        throw Error(ErrorCode::InvalidConfig,
                    "THZQ_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return 1;
}

std::filesystem::path history_path(const std::filesystem::path &ckpt) {
    auto p = ckpt;
    p.replace_extension(".history.csv");
    return p;
}

struct SynthArgs {
    std::uint64_t seed = 0;
    std::string out;
    std::string scene;
    std::string config;
};

struct TrainArgs {
    std::string model;
    std::string data;
    std::string out;
    TrainConfig config;
    bool freeze_vqc = false;
    std::optional<std::size_t> threads;
};

struct EvalArgs {
    std::string ckpt;
    std::string data;
    std::string split = "test";
    std::string heatmaps;
    std::string report;
    std::optional<std::size_t> threads;
};

struct GradcheckArgs {
    std::uint64_t seed = 0;
    double eps = 1e-5;
};

int do_synth(const SynthArgs &a, std::ostream &out, std::ostream &err) {
    SceneConfig config =
        a.config.empty() ? SceneConfig{} : read_scene_config_file(a.config);
    config.seed = a.seed;
    config.validate();
    err << "config: " << to_json(config).dump() << "\n";
    const Scene scene =
        a.scene.empty() ? make_scene(config) : read_scene_file(a.scene, config);
    const Dataset ds = synth_dataset(config, scene);
    write_dataset(ds, a.out);
    out << "wrote " << ds.samples.size() << " waveforms to " << a.out << "\n";
    return kOk;
}

int do_train(const TrainArgs &a, std::ostream &out, std::ostream &err) {
    TrainOptions options;
    options.freeze_vqc = a.freeze_vqc;
    options.threads = resolve_threads(a.threads);
    a.config.validate();
    const ModelKind model = kModelNames.at(a.model);
    err << "config: {\"model\":\"" << to_string(model) << "\",\"data\":\"" << a.data
        << "\",\"epochs\":" << a.config.epochs << ",\"lr\":" << a.config.base_lr
        << ",\"decay\":" << a.config.decay_factor
        << ",\"decay_every\":" << a.config.decay_every
        << ",\"batch\":" << a.config.batch_size << ",\"seed\":" << a.config.seed
        << ",\"freeze_vqc\":" << (a.freeze_vqc ? "true" : "false")
        << ",\"threads\":" << options.threads << ",\"vqc_qubits\":" << options.vqc.n_qubits
        << ",\"vqc_layers\":" << options.vqc.n_layers
        << ",\"feature_len\":" << options.vqc.feature_len
        << ",\"n_linear\":" << options.n_linear << "}\n";

    const Dataset ds = read_dataset(a.data);
    const auto result = train(model, ds, a.config, options);
    write_checkpoint(result.checkpoint, a.out);
    write_history_csv(result.metrics.history, history_path(a.out));
    out << "best_epoch=" << result.checkpoint.best_epoch << "\n";
    out << format_metrics_report(result.metrics);
    return kOk;
}

int do_eval(const EvalArgs &a, std::ostream &out, std::ostream &err) {
    const std::size_t threads = resolve_threads(a.threads);
    const Split split = kSplitNames.at(a.split);
    err << "config: {\"ckpt\":\"" << a.ckpt << "\",\"data\":\"" << a.data
        << "\",\"split\":\"" << to_string(split) << "\",\"heatmaps\":\"" << a.heatmaps
        << "\",\"threads\":" << threads << "}\n";
    const Checkpoint ckpt = read_checkpoint(a.ckpt);
    const Dataset ds = read_dataset(a.data);
    const Metrics m = evaluate(ckpt, ds, split, threads);
    const std::string report = "model=" + std::string(to_string(ckpt.kind)) + "\n" +
                               "split=" + std::string(to_string(split)) + "\n" +
                               format_metrics_report(m);
    out << report;
    if (!a.report.empty()) {
        write_text_file(a.report, report);
    }
    if (!a.heatmaps.empty()) {
        for (const auto &p : export_heatmaps(reconstruct_images(ckpt, ds, threads), a.heatmaps)) {
            err << "wrote " << p.string() << "\n";
        }
    }
    return kOk;
}

int do_gradcheck(const GradcheckArgs &a, std::ostream &out, std::ostream &err) {
    GradcheckOptions options;
    options.seed = a.seed;
    options.eps = a.eps;
    err << "config: {\"seed\":" << a.seed << ",\"eps\":" << a.eps
        << ",\"instances\":" << options.instances << "}\n";
    bool all = true;
    for (const auto &r : run_gradcheck(options)) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_error=" << r.max_error
            << " tol=" << r.tolerance << "\n";
        all = all && r.passed;
    }
    return all ? kOk : kRuntimeError;
}

int do_params(ModelKind kind, std::ostream &out, std::ostream &err) {
    const SceneConfig scene;
    const TrainOptions options;
    err << "config: {\"model\":\"" << to_string(kind)
        << "\",\"input_len\":" << scene.samples_per_waveform
        << ",\"surfaces\":" << scene.n_surfaces() << ",\"vqc_qubits\":" << options.vqc.n_qubits
        << ",\"vqc_layers\":" << options.vqc.n_layers << ",\"n_linear\":" << options.n_linear
        << "}\n";
    const auto c =
        parameter_counts(kind, scene.samples_per_waveform, scene.n_surfaces(), options);
    switch (kind) {
    case ModelKind::Intensity:
        out << "thresholds=" << c.thresholds << " total=" << c.total() << "\n";
        break;
    case ModelKind::LogReg:
    case ModelKind::Dnn:
        out << "head=" << c.head << " total=" << c.total() << "\n";
        break;
    case ModelKind::QmlDnn:
        out << "vqc=" << c.vqc << " head=" << c.head << " total=" << c.total() << "\n";
        break;
    }
    return kOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"THz multi-layer content recognition with a variational quantum feature "
                 "extractor"};
    app.name("thzq");
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto *synth = app.add_subcommand("synth", "generate a synthetic raster-scan dataset");
    synth->add_option("--seed", synth_args.seed, "scene/noise/split seed");
    synth->add_option("--out", synth_args.out, "output dataset file")->required();
    synth->add_option("--scene", synth_args.scene, "scene-override bitmap file")
        ->check(CLI::ExistingFile);
    synth->add_option("--config", synth_args.config, "JSON scene config overrides")
        ->check(CLI::ExistingFile);

    TrainArgs train_args;
    auto *train_cmd = app.add_subcommand("train", "train one of the four methods");
    train_cmd->add_option("--model", train_args.model, "intensity|logreg|dnn|qml-dnn")
        ->required()
        ->check(CLI::IsMember(kModelNames));
    train_cmd->add_option("--data", train_args.data, "dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train_args.out, "checkpoint file")->required();
    train_cmd->add_option("--epochs", train_args.config.epochs)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", train_args.config.base_lr)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--decay", train_args.config.decay_factor)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0) & CLI::PositiveNumber);
    train_cmd->add_option("--decay-every", train_args.config.decay_every)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch", train_args.config.batch_size)
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    train_cmd->add_option("--seed", train_args.config.seed)->capture_default_str();
    train_cmd->add_flag("--freeze-vqc", train_args.freeze_vqc, "keep VQC angles at init");
    train_cmd->add_option("--threads", train_args.threads)->check(CLI::PositiveNumber);

    EvalArgs eval_args;
    auto *eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--ckpt", eval_args.ckpt)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", eval_args.data)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--split", eval_args.split, "train|valid|test")
        ->capture_default_str()
        ->check(CLI::IsMember(kSplitNames));
    eval_cmd->add_option("--heatmaps", eval_args.heatmaps, "PGM/CSV output prefix");
    eval_cmd->add_option("--report", eval_args.report, "also write the report here");
    eval_cmd->add_option("--threads", eval_args.threads)->check(CLI::PositiveNumber);

    GradcheckArgs grad_args;
    auto *grad_cmd = app.add_subcommand("gradcheck", "gradient agreement self-test");
    grad_cmd->add_option("--seed", grad_args.seed)->capture_default_str();
    grad_cmd->add_option("--eps", grad_args.eps)->capture_default_str()->check(
        CLI::PositiveNumber);

    std::string params_kind;
    auto *params_cmd = app.add_subcommand("params", "print trainable-parameter counts");
    params_cmd->add_option("--model", params_kind)->required()->check(
        CLI::IsMember(kModelNames));

    try {
        // CLI11 wants the arguments reversed, without the program name
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "usage error: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        if (*synth) {
            return do_synth(synth_args, out, err);
        }
        if (*train_cmd) {
            return do_train(train_args, out, err);
        }
        if (*eval_cmd) {
            return do_eval(eval_args, out, err);
        }
        if (*grad_cmd) {
            return do_gradcheck(grad_args, out, err);
        }
        if (*params_cmd) {
            return do_params(kModelNames.at(params_kind), out, err);
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kUsageError;
}

int run_cli(int argc, char **argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_cli(args, std::cout, std::cerr);
}

} // namespace thzq
