#include "thzq/nn.hpp"

#include "thzq/error.hpp"
#include "thzq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace thzq {

double softplus(double x) noexcept {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double mish(double x) noexcept { return x * std::tanh(softplus(x)); }

double mish_grad(double x) noexcept {
    const double t = std::tanh(softplus(x));
    return t + x * (1.0 - t * t) * sigmoid(x);
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

constexpr double kScoreClamp = 1e-7;

template <typename Fn> Matrix map(const Matrix &m, Fn fn) {
    return m.unaryExpr([&](double v) { return fn(v); });
}

} // namespace

Mlp::Mlp(std::vector<Linear> linear, std::vector<BatchNorm> batch_norm)
    : linear_(std::move(linear)), batch_norm_(std::move(batch_norm)) {
    if (linear_.empty() || batch_norm_.size() + 1 != linear_.size()) {
        throw Error(ErrorCode::InvalidDims,
                    "need n linear layers and n-1 batch-norm layers");
    }
    for (std::size_t i = 0; i < linear_.size(); ++i) {
        const auto &l = linear_[i];
        if (l.weight.rows() < 1 || l.weight.cols() < 1 ||
            l.bias.size() != l.weight.rows()) {
            throw Error(ErrorCode::InvalidDims, "malformed linear layer " +
                                                    std::to_string(i));
        }
        if (i > 0 && l.weight.cols() != linear_[i - 1].weight.rows()) {
            throw Error(ErrorCode::InvalidDims,
                        "layer " + std::to_string(i) + " input width mismatch");
        }
        if (i + 1 < linear_.size()) {
            const auto &bn = batch_norm_[i];
            const auto width = l.weight.rows();
            if (bn.gamma.size() != width || bn.beta.size() != width ||
                bn.running_mean.size() != width ||
                bn.running_var.size() != width) {
                throw Error(ErrorCode::InvalidDims,
                            "batch-norm " + std::to_string(i) + " width mismatch");
            }
            if ((bn.running_var.array() <= 0.0).any() || !(bn.epsilon > 0.0)) {
                throw Error(ErrorCode::InvalidDims,
                            "batch-norm variances must be positive");
            }
        }
    }
}

std::vector<std::size_t> Mlp::layer_dims() const {
    std::vector<std::size_t> dims{input_dim()};
    for (const auto &l : linear_) {
        dims.push_back(static_cast<std::size_t>(l.weight.rows()));
    }
    return dims;
}

std::size_t Mlp::input_dim() const {
    return static_cast<std::size_t>(linear_.front().weight.cols());
}

std::size_t Mlp::output_dim() const {
    return static_cast<std::size_t>(linear_.back().weight.rows());
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto &l : linear_) {
        n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    }
    for (const auto &bn : batch_norm_) {
        n += static_cast<std::size_t>(bn.gamma.size() + bn.beta.size());
    }
    return n;
}

Matrix Mlp::run(const Matrix &batch, ForwardCache *cache, bool use_batch_stats,
                std::vector<BatchNorm> *update) const {
    if (batch.rows() < 1 || static_cast<std::size_t>(batch.cols()) != input_dim()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "batch is " + std::to_string(batch.rows()) + "x" +
                        std::to_string(batch.cols()) + ", model expects width " +
                        std::to_string(input_dim()));
    }
    const auto rows = static_cast<double>(batch.rows());
    Matrix a = batch;
    for (std::size_t i = 0; i + 1 < linear_.size(); ++i) {
        const auto &l = linear_[i];
        const auto &bn = batch_norm_[i];
        Matrix z = a * l.weight.transpose();
        z.rowwise() += l.bias.transpose();

        Vector mean;
        Vector var;
        if (use_batch_stats) {
            mean = z.colwise().mean().transpose();
            var = (z.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
        } else {
            mean = bn.running_mean;
            var = bn.running_var;
        }
        const Vector inv_std = (var.array() + bn.epsilon).rsqrt().matrix();
        Matrix xhat = ((z.rowwise() - mean.transpose()).array().rowwise() *
                       inv_std.transpose().array())
                          .matrix();
        Matrix y = (xhat.array().rowwise() * bn.gamma.transpose().array()).matrix();
        y.rowwise() += bn.beta.transpose();
        a = map(y, mish);

        if (update != nullptr) {
            auto &target = (*update)[i];
            const double m = target.momentum;
            const Vector unbiased = var * (rows / (rows - 1.0));
            target.running_mean = (1.0 - m) * target.running_mean + m * mean;
            target.running_var = (1.0 - m) * target.running_var + m * unbiased;
        }
        if (cache != nullptr) {
            cache->hidden.push_back(
                {std::move(xhat), inv_std, std::move(y), a});
        }
    }
    const auto &out = linear_.back();
    Matrix logits = a * out.weight.transpose();
    logits.rowwise() += out.bias.transpose();
    return map(logits, sigmoid);
}

ForwardResult Mlp::forward(const Matrix &batch) {
    ForwardResult r;
    r.cache.mode = mode_;
    r.cache.version = version_;
    r.cache.input = batch;
    if (mode_ == Mode::Train) {
        if (batch.rows() < 2) {
            throw Error(ErrorCode::BatchTooSmall,
                        "train-mode batch-norm needs at least 2 samples");
        }
        auto updated = batch_norm_;
        r.scores = run(batch, &r.cache, true, &updated);
        for (std::size_t i = 0; i < batch_norm_.size(); ++i) {
            batch_norm_[i].running_mean = std::move(updated[i].running_mean);
            batch_norm_[i].running_var = std::move(updated[i].running_var);
        }
    } else {
        r.scores = run(batch, &r.cache, false, nullptr);
    }
    r.cache.scores = r.scores;
    return r;
}

Matrix Mlp::predict(const Matrix &batch) const {
    return run(batch, nullptr, false, nullptr);
}

MlpGrads Mlp::backward(const ForwardCache &cache, const Matrix &labels) const {
    if (cache.mode != Mode::Train || cache.version != version_ ||
        cache.hidden.size() + 1 != linear_.size()) {
        throw Error(ErrorCode::StaleCache,
                    "backward needs a train-mode cache from the current parameters");
    }
    const Matrix &scores = cache.scores;
    if (labels.rows() != scores.rows() || labels.cols() != scores.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "labels shape differs from scores");
    }
    const auto n = static_cast<double>(scores.size());

    MlpGrads g;
    g.linear.resize(linear_.size());
    g.batch_norm.resize(batch_norm_.size());

    // d mean-BCE / d logit = (p - y) / (B * K)
    Matrix delta = (scores - labels) / n;
    for (std::size_t idx = linear_.size(); idx-- > 0;) {
        const Matrix &prev = idx == 0 ? cache.input : cache.hidden[idx - 1].activation;
        g.linear[idx].weight = delta.transpose() * prev;
        g.linear[idx].bias = delta.colwise().sum().transpose();
        Matrix d_prev = delta * linear_[idx].weight;
        if (idx == 0) {
            g.input = std::move(d_prev);
            break;
        }
        const auto &lc = cache.hidden[idx - 1];
        const auto &bn = batch_norm_[idx - 1];
        const Matrix dy = d_prev.cwiseProduct(map(lc.pre_mish, mish_grad));
        g.batch_norm[idx - 1].gamma =
            dy.cwiseProduct(lc.normalized).colwise().sum().transpose();
        g.batch_norm[idx - 1].beta = dy.colwise().sum().transpose();
        const Matrix dxhat =
            (dy.array().rowwise() * bn.gamma.transpose().array()).matrix();
        const Eigen::RowVectorXd mean_dxhat = dxhat.colwise().mean();
        const Eigen::RowVectorXd mean_dxhat_xhat =
            dxhat.cwiseProduct(lc.normalized).colwise().mean();
        Matrix centered = dxhat.rowwise() - mean_dxhat;
        centered -= (lc.normalized.array().rowwise() * mean_dxhat_xhat.array()).matrix();
        delta = (centered.array().rowwise() * lc.inv_std.transpose().array()).matrix();
    }
    return g;
}

void Mlp::apply_sgd(const MlpGrads &grads, double lr) {
    if (grads.linear.size() != linear_.size() ||
        grads.batch_norm.size() != batch_norm_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "gradient layer count mismatch");
    }
    const auto step = [lr](auto &param, const auto &grad) {
        if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
            throw Error(ErrorCode::ShapeMismatch, "gradient tensor shape mismatch");
        }
        sgd_step(std::span<double>(param.data(), static_cast<std::size_t>(param.size())),
                 std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size())),
                 lr);
    };
    for (std::size_t i = 0; i < linear_.size(); ++i) {
        step(linear_[i].weight, grads.linear[i].weight);
        step(linear_[i].bias, grads.linear[i].bias);
    }
    for (std::size_t i = 0; i < batch_norm_.size(); ++i) {
        step(batch_norm_[i].gamma, grads.batch_norm[i].gamma);
        step(batch_norm_[i].beta, grads.batch_norm[i].beta);
    }
    ++version_;
}

namespace {

template <typename Linears, typename Norms, typename Visit>
void visit_params(Linears &linear, Norms &norms, Visit visit) {
    for (std::size_t i = 0; i < linear.size(); ++i) {
        visit(linear[i].weight);
        visit(linear[i].bias);
        if (i < norms.size()) {
            visit(norms[i].gamma);
            visit(norms[i].beta);
        }
    }
}

} // namespace

std::vector<double> MlpGrads::flatten() const {
    std::vector<double> out;
    visit_params(linear, batch_norm, [&](const auto &t) {
        out.insert(out.end(), t.data(), t.data() + t.size());
    });
    return out;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    visit_params(linear_, batch_norm_, [&](const auto &t) {
        out.insert(out.end(), t.data(), t.data() + t.size());
    });
    return out;
}

void Mlp::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "expected " + std::to_string(parameter_count()) +
                        " parameters, got " + std::to_string(flat.size()));
    }
    std::size_t offset = 0;
    visit_params(linear_, batch_norm_, [&](auto &t) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.data());
        offset += static_cast<std::size_t>(t.size());
    });
    ++version_;
}

Mlp mlp_init(std::size_t input_dim, std::size_t output_dim, std::size_t n_linear,
             std::uint64_t seed) {
    if (output_dim < 1 || input_dim < output_dim || n_linear < 1) {
        throw Error(ErrorCode::InvalidDims,
                    "need input_dim >= output_dim >= 1 and n_linear >= 1");
    }
    std::vector<std::size_t> dims{input_dim};
    for (std::size_t i = 0; i + 1 < n_linear; ++i) {
        const std::size_t next = dims.back() / 2;
        if (next < 1) {
            throw Error(ErrorCode::InvalidDims,
                        "halving chain from " + std::to_string(input_dim) +
                            " runs out before " + std::to_string(n_linear) +
                            " layers");
        }
        dims.push_back(next);
    }
    dims.push_back(output_dim);

    Rng rng(seed);
    std::vector<Linear> linear;
    std::vector<BatchNorm> norms;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(dims[i]);
        const auto out = static_cast<Eigen::Index>(dims[i + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Linear l{Matrix(out, in), Vector::Zero(out)};
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) {
                l.weight(r, c) = rng.uniform(-bound, bound);
            }
        }
        linear.push_back(std::move(l));
        if (i + 2 < dims.size()) {
            norms.push_back({Vector::Ones(out), Vector::Zero(out), Vector::Zero(out),
                             Vector::Ones(out)});
        }
    }
    return Mlp(std::move(linear), std::move(norms));
}

double bce_loss(const Matrix &scores, const Matrix &labels) {
    if (scores.rows() != labels.rows() || scores.cols() != labels.cols() ||
        scores.size() == 0) {
        throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in shape");
    }
    double acc = 0.0;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            const double p = std::clamp(scores(r, c), kScoreClamp, 1.0 - kScoreClamp);
            const double y = labels(r, c);
            acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        }
    }
    return acc / static_cast<double>(scores.size());
}

void TrainConfig::validate() const {
    if (epochs < 1 || !(base_lr > 0.0) || !(decay_factor > 0.0) ||
        decay_factor > 1.0 || decay_every < 1 || batch_size < 2) {
        throw Error(ErrorCode::InvalidConfig,
                    "training config needs positive epochs/lr/decay_every, "
                    "decay in (0, 1], batch >= 2");
    }
}

double lr_at(const TrainConfig &config, std::size_t epoch) {
    return config.base_lr *
           std::pow(config.decay_factor,
                    static_cast<double>(epoch / config.decay_every));
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != grads.size()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "sgd: " + std::to_string(params.size()) + " params vs " +
                        std::to_string(grads.size()) + " grads");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= lr * grads[i];
    }
}

} // namespace thzq
