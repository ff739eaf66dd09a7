#include "thzq/statevector.hpp"

#include "thzq/error.hpp"

#include <cmath>
#include <string>

namespace thzq {

namespace {

void check_register_size(std::size_t n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "qubit count " + std::to_string(n_qubits) +
                        " outside 1.." + std::to_string(kMaxQubits));
    }
}

} // namespace

Statevector::Statevector(std::size_t n_qubits) : n_qubits_(n_qubits) {
    check_register_size(n_qubits);
    amps_.assign(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
    amps_[0] = Amplitude{1.0, 0.0};
}

Statevector Statevector::embed_amplitude(std::span<const double> waveform,
                                         std::size_t n_qubits) {
    check_register_size(n_qubits);
    const std::size_t dim = std::size_t{1} << n_qubits;
    if (waveform.empty() || waveform.size() > dim) {
        throw Error(ErrorCode::LengthExceedsRegister,
                    "waveform length " + std::to_string(waveform.size()) +
                        " does not fit " + std::to_string(dim) + " amplitudes");
    }
    double sq = 0.0;
    for (const double x : waveform) {
        sq += x * x;
    }
    if (!(sq > 0.0) || !std::isfinite(sq)) {
        throw Error(ErrorCode::ZeroNormWaveform,
                    "waveform has zero (or non-finite) l2 norm");
    }
    const double inv_norm = 1.0 / std::sqrt(sq);

    Statevector s;
    s.n_qubits_ = n_qubits;
    s.amps_.assign(dim, Amplitude{0.0, 0.0});
    for (std::size_t j = 0; j < waveform.size(); ++j) {
        s.amps_[j] = Amplitude{waveform[j] * inv_norm, 0.0};
    }
    return s;
}

Statevector Statevector::from_amplitudes(std::vector<Amplitude> amplitudes) {
    const std::size_t dim = amplitudes.size();
    if (dim < 2 || (dim & (dim - 1)) != 0) {
        throw Error(ErrorCode::LengthExceedsRegister,
                    "amplitude count must be a power of two >= 2");
    }
    std::size_t n = 0;
    while ((std::size_t{1} << n) < dim) {
        ++n;
    }
    check_register_size(n);
    Statevector s;
    s.n_qubits_ = n;
    s.amps_ = std::move(amplitudes);
    return s;
}

void Statevector::check_qubit(std::size_t q) const {
    if (q >= n_qubits_) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "qubit " + std::to_string(q) + " on a " +
                        std::to_string(n_qubits_) + "-qubit register");
    }
}

void Statevector::apply_ry(std::size_t qubit, double theta) {
    check_qubit(qubit);
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t dim = amps_.size();
    Amplitude *data = amps_.data();
    for (std::size_t block = 0; block < dim; block += 2 * stride) {
        for (std::size_t i = block; i < block + stride; ++i) {
            const Amplitude a0 = data[i];
            const Amplitude a1 = data[i + stride];
            data[i] = c * a0 - s * a1;
            data[i + stride] = s * a0 + c * a1;
        }
    }
    ++gate_applications_;
}

void Statevector::apply_cz(std::size_t a, std::size_t b) {
    check_qubit(a);
    check_qubit(b);
    if (a == b) {
        throw Error(ErrorCode::SameQubit,
                    "controlled-Z needs two distinct wires, got " +
                        std::to_string(a) + " twice");
    }
    const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        if ((i & mask) == mask) {
            amps_[i] = -amps_[i];
        }
    }
    ++gate_applications_;
}

std::vector<double> Statevector::probabilities() const {
    std::vector<double> p(amps_.size());
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        p[i] = std::norm(amps_[i]);
    }
    return p;
}

double Statevector::norm_squared() const noexcept {
    double acc = 0.0;
    for (const auto &a : amps_) {
        acc += std::norm(a);
    }
    return acc;
}

Statevector embed_amplitude(std::span<const double> waveform,
                            std::size_t n_qubits) {
    return Statevector::embed_amplitude(waveform, n_qubits);
}

Statevector apply_ry(Statevector state, std::size_t qubit, double theta) {
    state.apply_ry(qubit, theta);
    return state;
}

Statevector apply_cz(Statevector state, std::size_t a, std::size_t b) {
    state.apply_cz(a, b);
    return state;
}

std::vector<double> measure_probabilities(const Statevector &state) {
    return state.probabilities();
}

} // namespace thzq
