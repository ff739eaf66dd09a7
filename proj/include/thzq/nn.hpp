#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace thzq {

/// Row-major so one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

double softplus(double x) noexcept;
double mish(double x) noexcept;
/// d mish / dx
double mish_grad(double x) noexcept;
double sigmoid(double x) noexcept;

struct Linear {
    Matrix weight; // out x in
    Vector bias;   // out
};

struct BatchNorm {
    Vector gamma;
    Vector beta;
    Vector running_mean;
    Vector running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;
};

enum class Mode { Train, Eval };

struct LayerCache {
    Matrix normalized;  // x-hat
    Vector inv_std;
    Matrix pre_mish;    // gamma * x-hat + beta
    Matrix activation;  // mish(pre_mish)
};

struct ForwardCache {
    Mode mode = Mode::Eval;
    std::uint64_t version = 0;
    Matrix input;
    std::vector<LayerCache> hidden;
    Matrix scores;
};

struct ForwardResult {
    Matrix scores;
    ForwardCache cache;
};

struct BatchNormGrad {
    Vector gamma;
    Vector beta;
};

struct MlpGrads {
    std::vector<Linear> linear;
    std::vector<BatchNormGrad> batch_norm;
    Matrix input; // d loss / d batch

    [[nodiscard]] std::vector<double> flatten() const;
};

/// Feed-forward classifier: hidden layers are linear -> batch-norm -> Mish,
/// the output layer is linear -> sigmoid.
class Mlp {
  public:
    Mlp(std::vector<Linear> linear, std::vector<BatchNorm> batch_norm);

    [[nodiscard]] std::vector<std::size_t> layer_dims() const;
    [[nodiscard]] std::size_t n_linear() const noexcept { return linear_.size(); }
    [[nodiscard]] std::size_t input_dim() const;
    [[nodiscard]] std::size_t output_dim() const;
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    void set_mode(Mode m) noexcept { mode_ = m; }

    [[nodiscard]] const std::vector<Linear> &linear() const noexcept { return linear_; }
    [[nodiscard]] const std::vector<BatchNorm> &batch_norm() const noexcept {
        return batch_norm_;
    }

    /// Train mode normalizes with batch statistics and folds them into the
    /// running averages; eval mode reads the running averages only.
    ForwardResult forward(const Matrix &batch);

    /// Eval-mode scores without touching any state.
    [[nodiscard]] Matrix predict(const Matrix &batch) const;

    /// Exact gradients of the mean binary cross-entropy for a train-mode
    /// cache produced by this model at its current parameters.
    [[nodiscard]] MlpGrads backward(const ForwardCache &cache,
                                    const Matrix &labels) const;

    void apply_sgd(const MlpGrads &grads, double lr);

    /// Trainable parameters in a fixed order: per layer W (row-major), b,
    /// then gamma, beta for hidden layers.
    [[nodiscard]] std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    /// Bumped on every parameter change; caches remember it.
    [[nodiscard]] std::uint64_t version() const noexcept { return version_; }

  private:
    Matrix run(const Matrix &batch, ForwardCache *cache, bool use_batch_stats,
               std::vector<BatchNorm> *update) const;

    std::vector<Linear> linear_;
    std::vector<BatchNorm> batch_norm_;
    Mode mode_ = Mode::Train;
    std::uint64_t version_ = 0;
};

/// Floor-halving hidden widths from input_dim; weights uniform in
/// +-1/sqrt(fan_in), zero biases, identity batch-norm.
Mlp mlp_init(std::size_t input_dim, std::size_t output_dim,
             std::size_t n_linear, std::uint64_t seed);

/// Mean over batch and outputs; scores clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Matrix &scores, const Matrix &labels);

struct TrainConfig {
    std::size_t epochs = 1000;
    double base_lr = 5.0;
    double decay_factor = 0.5;
    std::size_t decay_every = 10;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;

    void validate() const;
};

double lr_at(const TrainConfig &config, std::size_t epoch);

/// Plain SGD: p -= lr * g.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

} // namespace thzq
