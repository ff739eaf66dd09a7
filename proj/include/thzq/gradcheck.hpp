#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace thzq {

struct GradcheckOptions {
    std::uint64_t seed = 0;
    double eps = 1e-5;          // finite-difference step for VQC angles
    double head_eps = 1e-4;     // finite-difference step for head parameters
    std::size_t instances = 20; // random VQC instances, n_qubits <= 6
};

struct GradcheckResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Parameter-shift vs adjoint vs central differences on random circuits,
/// then head and end-to-end hybrid gradients vs central differences.
std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions &options);

/// |a - b| / max(|a|, |b|, floor); the floor keeps near-zero entries from
/// turning finite-difference round-off into huge ratios.
double relative_error(double a, double b, double floor = 1e-3) noexcept;

} // namespace thzq
