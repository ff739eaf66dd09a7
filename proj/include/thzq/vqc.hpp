#pragma once

#include "thzq/statevector.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace thzq {

enum class GateKind { CZ, RY };

struct GateSpec {
    GateKind kind;
    std::size_t wire0 = 0;
    std::size_t wire1 = 0;                   // CZ only
    std::optional<std::size_t> param_index;  // RY only
};

/// Staggered RY/CZ ansatz.
///
/// Each layer is an even sub-layer over pairs (0,1),(2,3),... followed by an
/// odd sub-layer over (1,2),(3,4),...; every pair contributes CZ(a,b),
/// RY(a), RY(b). There is no leading rotation column, so the parameter count
/// is n_layers * (2 * n_qubits - 2).
class AnsatzLayout {
  public:
    AnsatzLayout(std::size_t n_qubits, std::size_t n_layers,
                 std::vector<GateSpec> gates, std::size_t param_count)
        : n_qubits_(n_qubits), n_layers_(n_layers), gates_(std::move(gates)),
          param_count_(param_count) {}

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t n_layers() const noexcept { return n_layers_; }
    [[nodiscard]] std::size_t param_count() const noexcept { return param_count_; }
    [[nodiscard]] std::size_t dim() const noexcept {
        return std::size_t{1} << n_qubits_;
    }
    [[nodiscard]] const std::vector<GateSpec> &gates() const noexcept {
        return gates_;
    }

  private:
    std::size_t n_qubits_;
    std::size_t n_layers_;
    std::vector<GateSpec> gates_;
    std::size_t param_count_;
};

AnsatzLayout build_layout(std::size_t n_qubits, std::size_t n_layers);

/// Uniform angles on [-pi, pi].
std::vector<double> init_thetas(const AnsatzLayout &layout, std::uint64_t seed);

struct FeatureVector {
    std::vector<double> values;
    double scale = 1.0;
};

/// Runs the layout's gates on an existing state.
void apply_layout(Statevector &state, const AnsatzLayout &layout,
                  std::span<const double> thetas);

/// Embed, evolve, measure; returns scale * p[j] for the first feature_len
/// basis states.
FeatureVector vqc_forward(const AnsatzLayout &layout,
                          std::span<const double> thetas,
                          std::span<const double> waveform,
                          std::size_t feature_len, double scale);

/// Counts statevector gate applications spent inside a gradient routine.
struct GateTally {
    std::size_t gate_applications = 0;
};

/// Vector-Jacobian product of vqc_forward by the two-term shift rule.
/// upstream has one entry per feature.
std::vector<double> grad_parameter_shift(const AnsatzLayout &layout,
                                         std::span<const double> thetas,
                                         std::span<const double> waveform,
                                         std::span<const double> upstream,
                                         double scale,
                                         GateTally *tally = nullptr);

/// Same product by one forward sweep plus one reverse (adjoint) sweep.
std::vector<double> grad_adjoint(const AnsatzLayout &layout,
                                 std::span<const double> thetas,
                                 std::span<const double> waveform,
                                 std::span<const double> upstream, double scale,
                                 GateTally *tally = nullptr);

} // namespace thzq
