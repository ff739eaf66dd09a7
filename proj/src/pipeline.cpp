#include "thzq/pipeline.hpp"

#include "parallel.hpp"
#include "thzq/error.hpp"
#include "thzq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace thzq {

namespace {

constexpr std::uint64_t kShuffleStream = 0x53485546ULL;
constexpr std::uint64_t kHeadStream = 0x48454144ULL;
constexpr std::uint64_t kVqcStream = 0x56514300ULL;

std::vector<std::size_t> require_split(const Dataset &dataset, Split split) {
    auto idx = dataset.indices(split);
    if (idx.empty()) {
        throw Error(ErrorCode::EmptySplit,
                    "dataset has no " + std::string(to_string(split)) + " samples");
    }
    return idx;
}

AnsatzLayout layout_of(const VqcState &vqc) {
    return build_layout(vqc.n_qubits, vqc.n_layers);
}

double mean_accuracy(const Matrix &scores, const Matrix &labels) {
    return metrics_from_scores(scores, labels).mean_accuracy;
}

} // namespace

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
    case ModelKind::Intensity: return "intensity";
    case ModelKind::LogReg: return "logreg";
    case ModelKind::Dnn: return "dnn";
    case ModelKind::QmlDnn: return "qml-dnn";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto kind : {ModelKind::Intensity, ModelKind::LogReg, ModelKind::Dnn,
                      ModelKind::QmlDnn}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw Error(ErrorCode::InvalidConfig, "unknown model kind '" + std::string(name) + "'");
}

Matrix waveform_matrix(const Dataset &dataset, std::span<const std::size_t> indices) {
    const auto width = static_cast<Eigen::Index>(dataset.config.samples_per_waveform);
    Matrix x(static_cast<Eigen::Index>(indices.size()), width);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto &w = dataset.samples.at(indices[r]).waveform;
        if (static_cast<Eigen::Index>(w.size()) != width) {
            throw Error(ErrorCode::ShapeMismatch, "waveform length differs from config");
        }
        x.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXd>(w.data(), width);
    }
    return x;
}

Matrix label_matrix(const Dataset &dataset, std::span<const std::size_t> indices) {
    const auto n_surfaces = static_cast<Eigen::Index>(dataset.config.n_surfaces());
    Matrix y(static_cast<Eigen::Index>(indices.size()), n_surfaces);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto &s = dataset.samples.at(indices[r]);
        for (Eigen::Index c = 0; c < n_surfaces; ++c) {
            y(static_cast<Eigen::Index>(r), c) =
                s.label_bit(static_cast<std::size_t>(c)) ? 1.0 : 0.0;
        }
    }
    return y;
}

Matrix vqc_features(const AnsatzLayout &layout, std::span<const double> thetas,
                    const Matrix &waveforms, std::size_t feature_len, double scale,
                    std::size_t threads) {
    Matrix features(waveforms.rows(), static_cast<Eigen::Index>(feature_len));
    detail::parallel_for(static_cast<std::size_t>(waveforms.rows()), threads,
                         [&](std::size_t i) {
                             const auto r = static_cast<Eigen::Index>(i);
                             const auto f = vqc_forward(
                                 layout, thetas,
                                 std::span<const double>(waveforms.row(r).data(),
                                                         static_cast<std::size_t>(waveforms.cols())),
                                 feature_len, scale);
                             for (std::size_t j = 0; j < feature_len; ++j) {
                                 features(r, static_cast<Eigen::Index>(j)) = f.values[j];
                             }
                         });
    return features;
}

HybridGradients hybrid_gradients(const AnsatzLayout &layout,
                                 std::span<const double> thetas, Mlp &head,
                                 const Matrix &waveforms, const Matrix &labels,
                                 std::size_t feature_len, double scale,
                                 std::size_t threads) {
    const Matrix features =
        vqc_features(layout, thetas, waveforms, feature_len, scale, threads);
    auto fwd = head.forward(features);
    HybridGradients out;
    out.loss = bce_loss(fwd.scores, labels);
    out.head = head.backward(fwd.cache, labels);

    const auto rows = static_cast<std::size_t>(waveforms.rows());
    std::vector<std::vector<double>> per_sample(rows);
    detail::parallel_for(rows, threads, [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        const Eigen::RowVectorXd upstream = out.head.input.row(r);
        per_sample[i] = grad_adjoint(
            layout, thetas,
            std::span<const double>(waveforms.row(r).data(),
                                    static_cast<std::size_t>(waveforms.cols())),
            std::span<const double>(upstream.data(), feature_len), scale);
    });
    out.thetas.assign(layout.param_count(), 0.0);
    for (const auto &g : per_sample) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            out.thetas[k] += g[k];
        }
    }
    return out;
}

std::vector<IntensityRule> fit_intensity(const Dataset &dataset) {
    const auto train_idx = require_split(dataset, Split::Train);
    const auto &config = dataset.config;
    std::vector<IntensityRule> rules;
    for (std::size_t s = 0; s < config.n_surfaces(); ++s) {
        IntensityRule rule;
        rule.window = gate_window(config, s);
        double sum[2] = {0.0, 0.0};
        std::size_t count[2] = {0, 0};
        for (const auto i : train_idx) {
            const auto &sample = dataset.samples[i];
            const int cls = sample.label_bit(s) ? 1 : 0;
            sum[cls] += gated_energy(sample.waveform, rule.window);
            ++count[cls];
        }
        if (count[0] == 0 || count[1] == 0) {
            throw Error(ErrorCode::DegenerateClass,
                        "surface " + std::to_string(s + 1) +
                            " has a single class in the train split");
        }
        rule.threshold = 0.5 * (sum[0] / static_cast<double>(count[0]) +
                                sum[1] / static_cast<double>(count[1]));
        rules.push_back(rule);
    }
    return rules;
}

Metrics metrics_from_scores(const Matrix &scores, const Matrix &labels) {
    if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in shape");
    }
    if (scores.rows() == 0) {
        throw Error(ErrorCode::EmptySplit, "no samples to score");
    }
    Metrics m;
    const auto rows = scores.rows();
    const auto cols = scores.cols();
    m.per_surface_accuracy.assign(static_cast<std::size_t>(cols), 0.0);
    std::size_t exact = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        bool all = true;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const bool predicted = scores(r, c) > 0.5;
            const bool truth = labels(r, c) > 0.5;
            if (predicted == truth) {
                m.per_surface_accuracy[static_cast<std::size_t>(c)] += 1.0;
            } else {
                all = false;
            }
        }
        exact += all ? 1 : 0;
    }
    double total = 0.0;
    for (auto &a : m.per_surface_accuracy) {
        a /= static_cast<double>(rows);
        total += a;
    }
    m.mean_accuracy = total / static_cast<double>(cols);
    m.exact_match_rate = static_cast<double>(exact) / static_cast<double>(rows);
    return m;
}

Matrix predict_scores(const Checkpoint &checkpoint, const Dataset &dataset,
                      std::span<const std::size_t> indices, std::size_t threads) {
    if (dataset.config.samples_per_waveform != checkpoint.input_len ||
        dataset.config.n_surfaces() != checkpoint.n_surfaces) {
        throw Error(ErrorCode::SchemaMismatch,
                    "checkpoint was trained on a different waveform/surface layout");
    }
    switch (checkpoint.kind) {
    case ModelKind::Intensity: {
        Matrix scores(static_cast<Eigen::Index>(indices.size()),
                      static_cast<Eigen::Index>(checkpoint.intensity.size()));
        for (std::size_t r = 0; r < indices.size(); ++r) {
            const auto &w = dataset.samples.at(indices[r]).waveform;
            for (std::size_t s = 0; s < checkpoint.intensity.size(); ++s) {
                const auto &rule = checkpoint.intensity[s];
                scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
                    gated_energy(w, rule.window) > rule.threshold ? 1.0 : 0.0;
            }
        }
        return scores;
    }
    case ModelKind::LogReg:
    case ModelKind::Dnn:
        return checkpoint.head.value().predict(waveform_matrix(dataset, indices));
    case ModelKind::QmlDnn: {
        const auto &vqc = checkpoint.vqc.value();
        const auto layout = layout_of(vqc);
        const Matrix features =
            vqc_features(layout, vqc.thetas, waveform_matrix(dataset, indices),
                         vqc.feature_len, vqc.scale, threads);
        return checkpoint.head.value().predict(features);
    }
    }
    throw Error(ErrorCode::SchemaMismatch, "unknown model kind");
}

Metrics evaluate(const Checkpoint &checkpoint, const Dataset &dataset, Split split,
                 std::size_t threads) {
    const auto idx = require_split(dataset, split);
    return metrics_from_scores(predict_scores(checkpoint, dataset, idx, threads),
                               label_matrix(dataset, idx));
}

ScoreMaps aggregate_score_maps(const Dataset &dataset, std::span<const std::size_t> indices,
                               const Matrix &scores) {
    const auto &config = dataset.config;
    const std::size_t side = config.pixels_per_side;
    const std::size_t n_surfaces = config.n_surfaces();
    if (static_cast<std::size_t>(scores.rows()) != indices.size() ||
        static_cast<std::size_t>(scores.cols()) != n_surfaces) {
        throw Error(ErrorCode::ShapeMismatch, "scores do not match samples x surfaces");
    }

    ScoreMaps out;
    out.pixels_per_side = side;
    out.maps.assign(n_surfaces, std::vector<double>(side * side, 0.0));
    std::vector<std::size_t> counts(side * side, 0);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto &s = dataset.samples.at(indices[r]);
        const std::size_t p = s.pixel.row * side + s.pixel.col;
        ++counts[p];
        for (std::size_t k = 0; k < n_surfaces; ++k) {
            out.maps[k][p] +=
                scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
        }
    }
    for (std::size_t p = 0; p < counts.size(); ++p) {
        if (counts[p] == 0) {
            throw Error(ErrorCode::EmptySplit,
                        "pixel " + std::to_string(p) + " has no samples");
        }
        for (auto &map : out.maps) {
            map[p] /= static_cast<double>(counts[p]);
        }
    }
    return out;
}

ScoreMaps reconstruct_images(const Checkpoint &checkpoint, const Dataset &dataset,
                             std::size_t threads) {
    const auto idx = require_split(dataset, Split::Test);
    return aggregate_score_maps(dataset, idx, predict_scores(checkpoint, dataset, idx, threads));
}

ParameterCounts parameter_counts(ModelKind kind, std::size_t input_len,
                                 std::size_t n_surfaces, const TrainOptions &options) {
    ParameterCounts c;
    switch (kind) {
    case ModelKind::Intensity:
        c.thresholds = n_surfaces;
        break;
    case ModelKind::LogReg:
        c.head = mlp_init(input_len, n_surfaces, 1, 0).parameter_count();
        break;
    case ModelKind::Dnn:
        c.head = mlp_init(input_len, n_surfaces, options.n_linear, 0).parameter_count();
        break;
    case ModelKind::QmlDnn:
        c.vqc = build_layout(options.vqc.n_qubits, options.vqc.n_layers).param_count();
        c.head = mlp_init(options.vqc.feature_len, n_surfaces, options.n_linear, 0)
                     .parameter_count();
        break;
    }
    return c;
}

TrainResult train(ModelKind kind, const Dataset &dataset, const TrainConfig &config,
                  const TrainOptions &options) {
    config.validate();
    const auto train_idx = require_split(dataset, Split::Train);
    const auto valid_idx = require_split(dataset, Split::Valid);
    const std::size_t n_surfaces = dataset.config.n_surfaces();
    const std::size_t input_len = dataset.config.samples_per_waveform;

    TrainResult result;
    Checkpoint &ckpt = result.checkpoint;
    ckpt.kind = kind;
    ckpt.seed = config.seed;
    ckpt.train_config = config;
    ckpt.input_len = input_len;
    ckpt.n_surfaces = n_surfaces;

    if (kind == ModelKind::Intensity) {
        ckpt.intensity = fit_intensity(dataset);
        result.metrics = evaluate(ckpt, dataset, Split::Valid, options.threads);
        return result;
    }

    std::optional<AnsatzLayout> layout;
    VqcState vqc;
    std::size_t head_input = input_len;
    if (kind == ModelKind::QmlDnn) {
        layout = build_layout(options.vqc.n_qubits, options.vqc.n_layers);
        if (input_len > layout->dim()) {
            throw Error(ErrorCode::LengthExceedsRegister,
                        "waveforms do not fit the VQC register");
        }
        if (options.vqc.feature_len > layout->dim()) {
            throw Error(ErrorCode::FeatureLenExceedsRegister,
                        "feature length exceeds the VQC register");
        }
        vqc.n_qubits = options.vqc.n_qubits;
        vqc.n_layers = options.vqc.n_layers;
        vqc.feature_len = options.vqc.feature_len;
        vqc.scale = options.vqc.resolved_scale();
        vqc.frozen = options.freeze_vqc;
        vqc.thetas = init_thetas(*layout, derive_seed(config.seed, kVqcStream));
        head_input = vqc.feature_len;
    }
    const std::size_t n_linear = kind == ModelKind::LogReg ? 1 : options.n_linear;
    Mlp head = mlp_init(head_input, n_surfaces, n_linear,
                        derive_seed(config.seed, kHeadStream));
    head.set_mode(Mode::Train);

    const Matrix x_train = waveform_matrix(dataset, train_idx);
    const Matrix y_train = label_matrix(dataset, train_idx);
    const Matrix x_valid = waveform_matrix(dataset, valid_idx);
    const Matrix y_valid = label_matrix(dataset, valid_idx);

    // with frozen angles the features never change
    Matrix frozen_train;
    Matrix frozen_valid;
    if (layout && vqc.frozen) {
        frozen_train = vqc_features(*layout, vqc.thetas, x_train, vqc.feature_len,
                                    vqc.scale, options.threads);
        frozen_valid = vqc_features(*layout, vqc.thetas, x_valid, vqc.feature_len,
                                    vqc.scale, options.threads);
    }

    Rng rng(derive_seed(config.seed, kShuffleStream));
    std::vector<Eigen::Index> order(train_idx.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<Eigen::Index>(i);
    }

    double best_acc = -1.0;
    Mlp best_head = head;
    std::vector<double> best_thetas = vqc.thetas;
    auto &history = result.metrics.history;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(config, epoch);
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            // a trailing singleton cannot be batch-normalized
            if (end - start < 2) {
                continue;
            }
            const auto rows = std::span(order).subspan(start, end - start);
            const Matrix y = y_train(rows, Eigen::all);
            double loss = 0.0;
            if (layout && !vqc.frozen) {
                const Matrix x = x_train(rows, Eigen::all);
                auto g = hybrid_gradients(*layout, vqc.thetas, head, x, y,
                                          vqc.feature_len, vqc.scale, options.threads);
                loss = g.loss;
                head.apply_sgd(g.head, lr);
                sgd_step(vqc.thetas, g.thetas, lr);
            } else {
                const Matrix x = layout ? Matrix(frozen_train(rows, Eigen::all))
                                        : Matrix(x_train(rows, Eigen::all));
                auto fwd = head.forward(x);
                loss = bce_loss(fwd.scores, y);
                head.apply_sgd(head.backward(fwd.cache, y), lr);
            }
            loss_sum += loss * static_cast<double>(rows.size());
            seen += rows.size();
        }

        Matrix valid_scores;
        if (layout) {
            const Matrix f = vqc.frozen ? frozen_valid
                                        : vqc_features(*layout, vqc.thetas, x_valid,
                                                       vqc.feature_len, vqc.scale,
                                                       options.threads);
            valid_scores = head.predict(f);
        } else {
            valid_scores = head.predict(x_valid);
        }
        const double acc = mean_accuracy(valid_scores, y_valid);
        history.push_back({epoch, lr, seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0,
                           acc});
        if (acc > best_acc) {
            best_acc = acc;
            best_head = head;
            best_thetas = vqc.thetas;
            ckpt.best_epoch = epoch;
        }
    }

    best_head.set_mode(Mode::Eval);
    ckpt.head = std::move(best_head);
    if (layout) {
        vqc.thetas = std::move(best_thetas);
        ckpt.vqc = std::move(vqc);
    }
    auto history_copy = std::move(result.metrics.history);
    result.metrics = evaluate(ckpt, dataset, Split::Valid, options.threads);
    result.metrics.history = std::move(history_copy);
    return result;
}

} // namespace thzq
