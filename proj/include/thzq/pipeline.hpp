#pragma once

#include "thzq/nn.hpp"
#include "thzq/synth.hpp"
#include "thzq/vqc.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace thzq {

enum class ModelKind { Intensity, LogReg, Dnn, QmlDnn };

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "intensity", "logreg", "dnn", "qml-dnn"; throws InvalidConfig.
ModelKind parse_model_kind(std::string_view name);

struct VqcSettings {
    std::size_t n_qubits = 8;
    std::size_t n_layers = 2;
    std::size_t feature_len = 196;
    /// 0 selects 2^n_qubits.
    double scale = 0.0;

    [[nodiscard]] double resolved_scale() const noexcept {
        return scale > 0.0 ? scale : static_cast<double>(std::size_t{1} << n_qubits);
    }
};

struct TrainOptions {
    VqcSettings vqc;
    std::size_t n_linear = 5;
    bool freeze_vqc = false;
    std::size_t threads = 1;
};

/// Time-gated reflection energy rule for one surface.
struct IntensityRule {
    GateWindow window;
    double threshold = 0.0;
};

struct VqcState {
    std::size_t n_qubits = 8;
    std::size_t n_layers = 2;
    std::size_t feature_len = 196;
    double scale = 256.0;
    std::vector<double> thetas;
    bool frozen = false;
};

struct Checkpoint {
    ModelKind kind = ModelKind::Dnn;
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    std::size_t input_len = 0;
    std::size_t n_surfaces = 0;
    TrainConfig train_config;
    std::optional<VqcState> vqc;
    std::optional<Mlp> head;
    std::vector<IntensityRule> intensity;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double valid_mean_acc = 0.0;
};

struct Metrics {
    std::vector<double> per_surface_accuracy;
    double mean_accuracy = 0.0;
    double exact_match_rate = 0.0;
    std::vector<EpochRecord> history;
};

struct TrainResult {
    Checkpoint checkpoint;
    /// Validation metrics of the stored (best-validation) parameters plus the
    /// per-epoch history.
    Metrics metrics;
};

TrainResult train(ModelKind kind, const Dataset &dataset, const TrainConfig &config,
                  const TrainOptions &options = {});

/// Per-surface gate and class-mean midpoint threshold from the train split.
std::vector<IntensityRule> fit_intensity(const Dataset &dataset);

/// Waveforms of the given samples as rows.
Matrix waveform_matrix(const Dataset &dataset, std::span<const std::size_t> indices);
Matrix label_matrix(const Dataset &dataset, std::span<const std::size_t> indices);

/// VQC features for each waveform row; rows are independent and may be
/// spread over `threads` workers.
Matrix vqc_features(const AnsatzLayout &layout, std::span<const double> thetas,
                    const Matrix &waveforms, std::size_t feature_len, double scale,
                    std::size_t threads = 1);

struct HybridGradients {
    double loss = 0.0;
    std::vector<double> thetas;
    MlpGrads head;
};

/// Loss and joint gradient of VQC angles and head parameters on one batch.
/// Per-sample angle gradients are summed in row order whatever `threads` is.
HybridGradients hybrid_gradients(const AnsatzLayout &layout,
                                 std::span<const double> thetas, Mlp &head,
                                 const Matrix &waveforms, const Matrix &labels,
                                 std::size_t feature_len, double scale,
                                 std::size_t threads = 1);

/// Scores in [0, 1], one row per requested sample.
Matrix predict_scores(const Checkpoint &checkpoint, const Dataset &dataset,
                      std::span<const std::size_t> indices, std::size_t threads = 1);

/// Bits are score > 0.5.
Metrics metrics_from_scores(const Matrix &scores, const Matrix &labels);

Metrics evaluate(const Checkpoint &checkpoint, const Dataset &dataset, Split split,
                 std::size_t threads = 1);

struct ScoreMaps {
    std::size_t pixels_per_side = 0;
    std::vector<std::vector<double>> maps; // surface -> row-major pixels
};

/// Mean score per pixel and surface over the given samples; throws EmptySplit
/// if a pixel receives no samples.
ScoreMaps aggregate_score_maps(const Dataset &dataset, std::span<const std::size_t> indices,
                               const Matrix &scores);

/// Mean test-split score per pixel and surface.
ScoreMaps reconstruct_images(const Checkpoint &checkpoint, const Dataset &dataset,
                             std::size_t threads = 1);

struct ParameterCounts {
    std::size_t vqc = 0;
    std::size_t head = 0;
    std::size_t thresholds = 0;
    [[nodiscard]] std::size_t total() const noexcept { return vqc + head + thresholds; }
};

ParameterCounts parameter_counts(ModelKind kind, std::size_t input_len,
                                 std::size_t n_surfaces, const TrainOptions &options = {});

} // namespace thzq
