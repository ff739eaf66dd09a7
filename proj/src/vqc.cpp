#include "thzq/vqc.hpp"

#include "thzq/error.hpp"
#include "thzq/rng.hpp"

#include <numbers>
#include <string>

namespace thzq {

AnsatzLayout build_layout(std::size_t n_qubits, std::size_t n_layers) {
    if (n_qubits < 2 || n_qubits % 2 != 0) {
        throw Error(ErrorCode::OddQubitCount,
                    "ansatz needs an even qubit count >= 2, got " +
                        std::to_string(n_qubits));
    }
    if (n_qubits > kMaxQubits) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "ansatz qubit count above " + std::to_string(kMaxQubits));
    }
    if (n_layers < 1) {
        throw Error(ErrorCode::NonPositiveLayers, "ansatz needs >= 1 layer");
    }

    std::vector<GateSpec> gates;
    std::size_t next_param = 0;
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
        for (std::size_t offset : {0U, 1U}) {
            for (std::size_t a = offset; a + 1 < n_qubits; a += 2) {
                gates.push_back({GateKind::CZ, a, a + 1, std::nullopt});
                gates.push_back({GateKind::RY, a, 0, next_param++});
                gates.push_back({GateKind::RY, a + 1, 0, next_param++});
            }
        }
    }
    return AnsatzLayout(n_qubits, n_layers, std::move(gates), next_param);
}

std::vector<double> init_thetas(const AnsatzLayout &layout, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> thetas(layout.param_count());
    for (auto &t : thetas) {
        t = rng.uniform(-std::numbers::pi, std::numbers::pi);
    }
    return thetas;
}

namespace {

void check_thetas(const AnsatzLayout &layout, std::span<const double> thetas) {
    if (thetas.size() != layout.param_count()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "expected " + std::to_string(layout.param_count()) +
                        " angles, got " + std::to_string(thetas.size()));
    }
}

void check_feature_len(const AnsatzLayout &layout, std::size_t feature_len) {
    if (feature_len > layout.dim()) {
        throw Error(ErrorCode::FeatureLenExceedsRegister,
                    "feature length " + std::to_string(feature_len) +
                        " exceeds " + std::to_string(layout.dim()) +
                        " basis states");
    }
}

void apply_gate(Statevector &state, const GateSpec &g,
                std::span<const double> thetas, bool inverse) {
    if (g.kind == GateKind::CZ) {
        state.apply_cz(g.wire0, g.wire1);
    } else {
        const double theta = thetas[*g.param_index];
        state.apply_ry(g.wire0, inverse ? -theta : theta);
    }
}

Statevector evolve(const AnsatzLayout &layout, std::span<const double> thetas,
                   std::span<const double> waveform) {
    auto state = Statevector::embed_amplitude(waveform, layout.n_qubits());
    apply_layout(state, layout, thetas);
    return state;
}

} // namespace

void apply_layout(Statevector &state, const AnsatzLayout &layout,
                  std::span<const double> thetas) {
    check_thetas(layout, thetas);
    for (const auto &g : layout.gates()) {
        apply_gate(state, g, thetas, false);
    }
}

FeatureVector vqc_forward(const AnsatzLayout &layout,
                          std::span<const double> thetas,
                          std::span<const double> waveform,
                          std::size_t feature_len, double scale) {
    check_feature_len(layout, feature_len);
    const auto state = evolve(layout, thetas, waveform);
    const auto amps = state.amplitudes();
    FeatureVector out;
    out.scale = scale;
    out.values.resize(feature_len);
    for (std::size_t j = 0; j < feature_len; ++j) {
        out.values[j] = scale * std::norm(amps[j]);
    }
    return out;
}

std::vector<double> grad_parameter_shift(const AnsatzLayout &layout,
                                         std::span<const double> thetas,
                                         std::span<const double> waveform,
                                         std::span<const double> upstream,
                                         double scale, GateTally *tally) {
    check_thetas(layout, thetas);
    check_feature_len(layout, upstream.size());

    const auto weighted = [&](const Statevector &s) {
        const auto amps = s.amplitudes();
        double acc = 0.0;
        for (std::size_t j = 0; j < upstream.size(); ++j) {
            acc += upstream[j] * scale * std::norm(amps[j]);
        }
        return acc;
    };

    std::vector<double> shifted(thetas.begin(), thetas.end());
    std::vector<double> grad(layout.param_count(), 0.0);
    for (std::size_t k = 0; k < grad.size(); ++k) {
        shifted[k] = thetas[k] + std::numbers::pi / 2;
        const auto plus = evolve(layout, shifted, waveform);
        shifted[k] = thetas[k] - std::numbers::pi / 2;
        const auto minus = evolve(layout, shifted, waveform);
        shifted[k] = thetas[k];
        grad[k] = 0.5 * (weighted(plus) - weighted(minus));
        if (tally != nullptr) {
            tally->gate_applications +=
                plus.gate_applications() + minus.gate_applications();
        }
    }
    return grad;
}

std::vector<double> grad_adjoint(const AnsatzLayout &layout,
                                 std::span<const double> thetas,
                                 std::span<const double> waveform,
                                 std::span<const double> upstream, double scale,
                                 GateTally *tally) {
    check_thetas(layout, thetas);
    check_feature_len(layout, upstream.size());

    // phi walks back from the output state, lambda = O|psi> with the
    // diagonal observable O = diag(scale * upstream, 0...).
    auto phi = evolve(layout, thetas, waveform);
    std::vector<Statevector::Amplitude> weighted(layout.dim());
    {
        const auto amps = phi.amplitudes();
        for (std::size_t j = 0; j < upstream.size(); ++j) {
            weighted[j] = (scale * upstream[j]) * amps[j];
        }
    }
    auto lambda = Statevector::from_amplitudes(std::move(weighted));

    std::vector<double> grad(layout.param_count(), 0.0);
    std::size_t derivative_gates = 0;
    const auto &gates = layout.gates();
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
        apply_gate(phi, *it, thetas, true);
        if (it->kind == GateKind::RY) {
            // dRY(t)/dt = RY(t + pi) / 2
            auto mu = phi;
            mu.apply_ry(it->wire0, thetas[*it->param_index] + std::numbers::pi);
            ++derivative_gates;
            const auto l = lambda.amplitudes();
            const auto m = mu.amplitudes();
            double re = 0.0;
            for (std::size_t i = 0; i < l.size(); ++i) {
                re += l[i].real() * m[i].real() + l[i].imag() * m[i].imag();
            }
            // 2 Re<lambda|dU phi> with the 1/2 from the derivative folded in
            grad[*it->param_index] = re;
        }
        apply_gate(lambda, *it, thetas, true);
    }
    if (tally != nullptr) {
        tally->gate_applications += phi.gate_applications() +
                                    lambda.gate_applications() +
                                    derivative_gates;
    }
    return grad;
}

} // namespace thzq
