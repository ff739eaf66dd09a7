#include "thzq/gradcheck.hpp"

#include "thzq/nn.hpp"
#include "thzq/pipeline.hpp"
#include "thzq/rng.hpp"
#include "thzq/vqc.hpp"

#include <algorithm>
#include <cmath>

namespace thzq {

double relative_error(double a, double b, double floor) noexcept {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

namespace {

double weighted_output(const AnsatzLayout &layout, const std::vector<double> &thetas,
                       const std::vector<double> &waveform,
                       const std::vector<double> &upstream, double scale) {
    const auto f = vqc_forward(layout, thetas, waveform, upstream.size(), scale);
    double acc = 0.0;
    for (std::size_t j = 0; j < upstream.size(); ++j) {
        acc += upstream[j] * f.values[j];
    }
    return acc;
}

Matrix random_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = rng.uniform(lo, hi);
        }
    }
    return m;
}

Matrix random_labels(Rng &rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        }
    }
    return m;
}

} // namespace

std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions &options) {
    Rng rng(derive_seed(options.seed, 0x47524144ULL));
    GradcheckResult shift_vs_adjoint{"vqc parameter-shift vs adjoint (abs)", 0.0, 1e-9};
    GradcheckResult shift_vs_fd{"vqc parameter-shift vs finite differences (abs)", 0.0, 1e-5};
    GradcheckResult adjoint_vs_fd{"vqc adjoint vs finite differences (abs)", 0.0, 1e-5};

    for (std::size_t inst = 0; inst < options.instances; ++inst) {
        const std::size_t n = 2 * (1 + rng.below(3));
        const std::size_t layers = 1 + rng.below(3);
        const auto layout = build_layout(n, layers);
        const std::size_t dim = layout.dim();
        std::vector<double> thetas(layout.param_count());
        for (auto &t : thetas) {
            t = rng.uniform(-3.2, 3.2);
        }
        std::vector<double> waveform(1 + rng.below(dim));
        for (auto &w : waveform) {
            w = rng.uniform(-1.0, 1.0);
        }
        std::vector<double> upstream(1 + rng.below(dim));
        for (auto &u : upstream) {
            u = rng.uniform(-1.0, 1.0);
        }
        const double scale = static_cast<double>(dim);

        const auto ps = grad_parameter_shift(layout, thetas, waveform, upstream, scale);
        const auto adj = grad_adjoint(layout, thetas, waveform, upstream, scale);
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            auto shifted = thetas;
            shifted[k] = thetas[k] + options.eps;
            const double up = weighted_output(layout, shifted, waveform, upstream, scale);
            shifted[k] = thetas[k] - options.eps;
            const double down = weighted_output(layout, shifted, waveform, upstream, scale);
            const double fd = (up - down) / (2.0 * options.eps);
            shift_vs_adjoint.max_error =
                std::max(shift_vs_adjoint.max_error, std::abs(ps[k] - adj[k]));
            shift_vs_fd.max_error = std::max(shift_vs_fd.max_error, std::abs(ps[k] - fd));
            adjoint_vs_fd.max_error = std::max(adjoint_vs_fd.max_error, std::abs(adj[k] - fd));
        }
    }

    // head gradients on a 4-sample batch
    GradcheckResult head{"mlp parameters + input vs finite differences (rel)", 0.0, 1e-4};
    {
        Mlp mlp = mlp_init(24, 6, 3, derive_seed(options.seed, 1));
        mlp.set_mode(Mode::Train);
        const Matrix x = random_matrix(rng, 4, 24, -1.0, 1.0);
        const Matrix y = random_labels(rng, 4, 6);
        auto fwd = mlp.forward(x);
        const auto grads = mlp.backward(fwd.cache, y);
        const auto analytic = grads.flatten();
        auto params = mlp.flatten();
        const double h = options.head_eps;
        for (std::size_t k = 0; k < params.size(); ++k) {
            const double saved = params[k];
            params[k] = saved + h;
            mlp.assign(params);
            const double up = bce_loss(mlp.forward(x).scores, y);
            params[k] = saved - h;
            mlp.assign(params);
            const double down = bce_loss(mlp.forward(x).scores, y);
            params[k] = saved;
            head.max_error = std::max(
                head.max_error, relative_error(analytic[k], (up - down) / (2.0 * h)));
        }
        mlp.assign(params);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                Matrix xp = x;
                xp(r, c) += h;
                Matrix xm = x;
                xm(r, c) -= h;
                const double fd = (bce_loss(mlp.forward(xp).scores, y) -
                                   bce_loss(mlp.forward(xm).scores, y)) /
                                  (2.0 * h);
                head.max_error =
                    std::max(head.max_error, relative_error(grads.input(r, c), fd));
            }
        }
    }

    // joint VQC + head gradient of the total loss
    GradcheckResult hybrid{"hybrid end-to-end vs finite differences (rel)", 0.0, 1e-4};
    {
        const auto layout = build_layout(4, 2);
        const std::size_t features = 12;
        const double scale = 16.0;
        auto thetas = init_thetas(layout, derive_seed(options.seed, 2));
        Mlp mlp = mlp_init(features, 6, 3, derive_seed(options.seed, 3));
        mlp.set_mode(Mode::Train);
        const Matrix x = random_matrix(rng, 4, 14, -1.0, 1.0);
        const Matrix y = random_labels(rng, 4, 6);
        const auto g = hybrid_gradients(layout, thetas, mlp, x, y, features, scale);
        const auto loss_at = [&](const std::vector<double> &t) {
            return bce_loss(mlp.forward(vqc_features(layout, t, x, features, scale)).scores, y);
        };
        const double h = options.head_eps;
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            auto tp = thetas;
            tp[k] += h;
            auto tm = thetas;
            tm[k] -= h;
            const double fd = (loss_at(tp) - loss_at(tm)) / (2.0 * h);
            hybrid.max_error = std::max(hybrid.max_error, relative_error(g.thetas[k], fd));
        }
        const auto analytic = g.head.flatten();
        auto params = mlp.flatten();
        for (std::size_t k = 0; k < params.size(); ++k) {
            const double saved = params[k];
            params[k] = saved + h;
            mlp.assign(params);
            const double up = loss_at(thetas);
            params[k] = saved - h;
            mlp.assign(params);
            const double down = loss_at(thetas);
            params[k] = saved;
            hybrid.max_error = std::max(
                hybrid.max_error, relative_error(analytic[k], (up - down) / (2.0 * h)));
        }
    }

    std::vector<GradcheckResult> out{shift_vs_adjoint, shift_vs_fd, adjoint_vs_fd, head, hybrid};
    for (auto &r : out) {
        r.passed = r.max_error <= r.tolerance;
    }
    return out;
}

} // namespace thzq
