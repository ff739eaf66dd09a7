#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace thzq {

inline constexpr std::size_t kMaxQubits = 12;

/// Dense pure state of an n-qubit register.
///
/// Basis indexing is little-endian: qubit 0 is the least-significant bit of
/// the basis index. Gates act in place through stride kernels; no gate
/// matrix is ever materialized. Every gate application increments
/// gate_applications(), which the gradient routines use for cost accounting.
class Statevector {
  public:
    using Amplitude = std::complex<double>;

    /// |0...0> on n_qubits wires.
    explicit Statevector(std::size_t n_qubits);

    /// Amplitude embedding of a real signal, zero-padded at the tail.
    static Statevector embed_amplitude(std::span<const double> waveform,
                                       std::size_t n_qubits);

    /// Takes ownership of raw amplitudes; size must be a power of two.
    static Statevector from_amplitudes(std::vector<Amplitude> amplitudes);

    void apply_ry(std::size_t qubit, double theta);
    void apply_cz(std::size_t a, std::size_t b);

    /// |amplitude|^2 for every basis state.
    [[nodiscard]] std::vector<double> probabilities() const;

    [[nodiscard]] double norm_squared() const noexcept;

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Amplitude> amplitudes() const noexcept {
        return amps_;
    }
    [[nodiscard]] std::span<Amplitude> amplitudes() noexcept { return amps_; }

    [[nodiscard]] std::size_t gate_applications() const noexcept {
        return gate_applications_;
    }

  private:
    Statevector() = default;
    void check_qubit(std::size_t q) const;

    std::size_t n_qubits_ = 0;
    std::vector<Amplitude> amps_;
    std::size_t gate_applications_ = 0;
};

// Value-returning forms of the gate primitives.
Statevector embed_amplitude(std::span<const double> waveform,
                            std::size_t n_qubits);
Statevector apply_ry(Statevector state, std::size_t qubit, double theta);
Statevector apply_cz(Statevector state, std::size_t a, std::size_t b);
std::vector<double> measure_probabilities(const Statevector &state);

} // namespace thzq
