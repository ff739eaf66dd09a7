#include "oracles.hpp"
#include "thzq/error.hpp"
#include "thzq/rng.hpp"
#include "thzq/vqc.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace thzq;

namespace {

ErrorCode code_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected a thzq::Error");
    return ErrorCode::IoFailure;
}

std::vector<double> random_vector(Rng &rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto &x : v) {
        x = rng.uniform(lo, hi);
    }
    return v;
}

/// Dense-matrix forward pass, independent of the stride kernels.
std::vector<double> dense_forward(const AnsatzLayout &layout, const std::vector<double> &thetas,
                                  const std::vector<double> &waveform, std::size_t f,
                                  double scale) {
    const std::size_t n = layout.n_qubits();
    std::vector<oracle::cplx> v(layout.dim(), 0.0);
    double norm = 0.0;
    for (const double w : waveform) {
        norm += w * w;
    }
    for (std::size_t i = 0; i < waveform.size(); ++i) {
        v[i] = waveform[i] / std::sqrt(norm);
    }
    for (const auto &g : layout.gates()) {
        v = oracle::matvec(g.kind == GateKind::CZ
                               ? oracle::cz_matrix(n, g.wire0, g.wire1)
                               : oracle::ry_matrix(n, g.wire0, thetas[*g.param_index]),
                           v);
    }
    std::vector<double> out(f);
    for (std::size_t j = 0; j < f; ++j) {
        out[j] = scale * std::norm(v[j]);
    }
    return out;
}

AnsatzLayout single_ry() {
    return AnsatzLayout(1, 1, {GateSpec{GateKind::RY, 0, 0, 0}}, 1);
}

} // namespace

TEST_CASE("build_layout parameter counts") {
    CHECK(build_layout(8, 2).param_count() == 28);
    CHECK(build_layout(8, 1).param_count() == 14);
    CHECK(build_layout(2, 1).param_count() == 2);
    CHECK(build_layout(4, 3).param_count() == 18);
    for (std::size_t n = 2; n <= 12; n += 2) {
        for (std::size_t layers = 1; layers <= 4; ++layers) {
            CHECK(build_layout(n, layers).param_count() == layers * (2 * n - 2));
        }
    }
}

TEST_CASE("build_layout structure: even pairs, then odd pairs, CZ before RYs") {
    const auto layout = build_layout(6, 2);
    std::vector<std::pair<std::size_t, std::size_t>> expected_pairs;
    for (int layer = 0; layer < 2; ++layer) {
        for (std::size_t a : {0U, 2U, 4U, 1U, 3U}) {
            expected_pairs.emplace_back(a, a + 1);
        }
    }
    const auto &gates = layout.gates();
    REQUIRE(gates.size() == 3 * expected_pairs.size());
    std::size_t next = 0;
    for (std::size_t p = 0; p < expected_pairs.size(); ++p) {
        const auto &cz = gates[3 * p];
        CHECK(cz.kind == GateKind::CZ);
        CHECK_FALSE(cz.param_index.has_value());
        CHECK(cz.wire0 == expected_pairs[p].first);
        CHECK(cz.wire1 == expected_pairs[p].second);
        for (std::size_t k = 1; k <= 2; ++k) {
            const auto &ry = gates[3 * p + k];
            CHECK(ry.kind == GateKind::RY);
            CHECK(ry.wire0 == expected_pairs[p].first + k - 1);
            REQUIRE(ry.param_index.has_value());
            CHECK(*ry.param_index == next++);
        }
    }
}

TEST_CASE("build_layout errors") {
    CHECK(code_of([] { build_layout(7, 2); }) == ErrorCode::OddQubitCount);
    CHECK(code_of([] { build_layout(0, 2); }) == ErrorCode::OddQubitCount);
    CHECK(code_of([] { build_layout(8, 0); }) == ErrorCode::NonPositiveLayers);
}

TEST_CASE("vqc_forward zero angles reproduce the squared normalized waveform") {
    const auto layout = build_layout(8, 2);
    const std::vector<double> zeros(layout.param_count(), 0.0);
    Rng rng(5);
    const auto w = random_vector(rng, 196, -1, 1);
    const auto f = vqc_forward(layout, zeros, w, 196, 256.0);
    REQUIRE(f.values.size() == 196);
    double norm = 0.0;
    for (const double x : w) {
        norm += x * x;
    }
    for (std::size_t j = 0; j < 196; ++j) {
        CHECK(std::abs(f.values[j] - 256.0 * w[j] * w[j] / norm) <= 1e-12);
    }
}

TEST_CASE("vqc_forward matches the dense-matrix oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 * (1 + rng.below(3));
        const auto layout = build_layout(n, 1 + rng.below(3));
        const auto thetas = random_vector(rng, layout.param_count(), -3.2, 3.2);
        const auto w = random_vector(rng, 1 + rng.below(layout.dim()), -1, 1);
        const std::size_t f = 1 + rng.below(layout.dim());
        const auto got = vqc_forward(layout, thetas, w, f, 3.0);
        const auto want = dense_forward(layout, thetas, w, f, 3.0);
        for (std::size_t j = 0; j < f; ++j) {
            CHECK(std::abs(got.values[j] - want[j]) < 1e-12);
        }
    }
}

TEST_CASE("property: features non-negative, truncated mass bounded, deterministic") {
    Rng rng(99);
    const auto layout = build_layout(8, 2);
    for (int trial = 0; trial < 30; ++trial) {
        const auto thetas = init_thetas(layout, rng.below(1000));
        const auto w = random_vector(rng, 196, -1, 1);
        const auto a = vqc_forward(layout, thetas, w, 196, 256.0);
        const auto b = vqc_forward(layout, thetas, w, 196, 256.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < a.values.size(); ++j) {
            CHECK(a.values[j] >= 0.0);
            CHECK(a.values[j] == b.values[j]);
            sum += a.values[j];
        }
        CHECK(sum / a.scale <= 1.0 + 1e-12);
    }
}

TEST_CASE("vqc_forward errors") {
    const auto layout = build_layout(2, 1);
    const std::vector<double> thetas(2, 0.1);
    CHECK(code_of([&] { vqc_forward(layout, thetas, std::vector<double>{1, 2}, 5, 1.0); }) ==
          ErrorCode::FeatureLenExceedsRegister);
    CHECK(code_of([&] { vqc_forward(layout, thetas, std::vector<double>{0, 0}, 2, 1.0); }) ==
          ErrorCode::ZeroNormWaveform);
    CHECK(code_of([&] { vqc_forward(layout, thetas, std::vector<double>(5, 1.0), 2, 1.0); }) ==
          ErrorCode::LengthExceedsRegister);
    CHECK(code_of([&] {
              vqc_forward(layout, std::vector<double>(3, 0.0), std::vector<double>{1}, 2, 1.0);
          }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("single RY on |0>: d p0 / d theta = -sin(theta)/2") {
    const auto layout = single_ry();
    const std::vector<double> w{1.0};
    const std::vector<double> up{1.0};
    for (const auto &grad : {&grad_parameter_shift, &grad_adjoint}) {
        const auto at_half_pi =
            (*grad)(layout, std::vector<double>{std::numbers::pi / 2}, w, up, 1.0, nullptr);
        CHECK(at_half_pi[0] == doctest::Approx(-0.5).epsilon(1e-12));
        const auto at_zero = (*grad)(layout, std::vector<double>{0.0}, w, up, 1.0, nullptr);
        CHECK(std::abs(at_zero[0]) <= 1e-15);
    }
}

TEST_CASE("parameter-shift and adjoint agree on random n=4, L=2 instances") {
    Rng rng(4242);
    const auto layout = build_layout(4, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto thetas = random_vector(rng, layout.param_count(), -3.2, 3.2);
        const auto w = random_vector(rng, 16, -1, 1);
        const auto up = random_vector(rng, 12, -1, 1);
        const auto ps = grad_parameter_shift(layout, thetas, w, up, 16.0);
        const auto adj = grad_adjoint(layout, thetas, w, up, 16.0);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            CHECK(std::abs(ps[k] - adj[k]) <= 1e-9);
        }
    }
}

TEST_CASE("all-zero angles: gradient of the feature sum matches parameter shift") {
    const auto layout = build_layout(6, 2);
    const std::vector<double> zeros(layout.param_count(), 0.0);
    Rng rng(8);
    const auto w = random_vector(rng, 50, -1, 1);
    const std::vector<double> ones(40, 1.0);
    const auto ps = grad_parameter_shift(layout, zeros, w, ones, 64.0);
    const auto adj = grad_adjoint(layout, zeros, w, ones, 64.0);
    for (std::size_t k = 0; k < ps.size(); ++k) {
        CHECK(std::abs(ps[k] - adj[k]) <= 1e-9);
    }
}

TEST_CASE("property: gradient triple agreement on 20+ random instances") {
    Rng rng(31337);
    for (int trial = 0; trial < 24; ++trial) {
        const std::size_t n = 2 * (1 + rng.below(3));
        const auto layout = build_layout(n, 1 + rng.below(4));
        const auto thetas = random_vector(rng, layout.param_count(), -3.2, 3.2);
        const auto w = random_vector(rng, 1 + rng.below(layout.dim()), -1, 1);
        const auto up = random_vector(rng, 1 + rng.below(layout.dim()), -1, 1);
        const double scale = static_cast<double>(layout.dim());

        const auto objective = [&](const std::vector<double> &t) {
            const auto dense = dense_forward(layout, t, w, up.size(), scale);
            double acc = 0.0;
            for (std::size_t j = 0; j < up.size(); ++j) {
                acc += up[j] * dense[j];
            }
            return acc;
        };
        const auto fd = oracle::fd_gradient(objective, thetas, 1e-5);
        const auto ps = grad_parameter_shift(layout, thetas, w, up, scale);
        const auto adj = grad_adjoint(layout, thetas, w, up, scale);
        for (std::size_t k = 0; k < fd.size(); ++k) {
            CHECK(std::abs(ps[k] - adj[k]) <= 1e-9);
            CHECK(std::abs(ps[k] - fd[k]) <= 1e-5);
            CHECK(std::abs(adj[k] - fd[k]) <= 1e-5);
        }
    }
}

TEST_CASE("adjoint spends fewer gate applications than parameter shift when P > 2") {
    Rng rng(1);
    for (const auto &[n, layers] : {std::pair{2, 2}, {4, 1}, {8, 2}}) {
        const auto layout = build_layout(n, layers);
        REQUIRE(layout.param_count() > 2);
        const auto thetas = random_vector(rng, layout.param_count(), -3, 3);
        const auto w = random_vector(rng, layout.dim(), -1, 1);
        const auto up = random_vector(rng, layout.dim(), -1, 1);
        GateTally shift;
        GateTally adjoint;
        (void)grad_parameter_shift(layout, thetas, w, up, 1.0, &shift);
        (void)grad_adjoint(layout, thetas, w, up, 1.0, &adjoint);
        const std::size_t g = layout.gates().size();
        CHECK(shift.gate_applications == 2 * layout.param_count() * g);
        CHECK(adjoint.gate_applications == 3 * g + layout.param_count());
        CHECK(adjoint.gate_applications < shift.gate_applications);
    }
}

TEST_CASE("init_thetas is seeded uniform on [-pi, pi]") {
    const auto layout = build_layout(8, 2);
    const auto a = init_thetas(layout, 12);
    const auto b = init_thetas(layout, 12);
    const auto c = init_thetas(layout, 13);
    CHECK(a == b);
    CHECK(a != c);
    for (const double t : a) {
        CHECK(t >= -std::numbers::pi);
        CHECK(t <= std::numbers::pi);
    }
}
