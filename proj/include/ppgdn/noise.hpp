#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ppgdn::noise {

enum class NoiseKind { gaussian, poisson, uniform, salt_pepper };

std::string kind_name(NoiseKind kind);
NoiseKind kind_from_name(const std::string& name);

/// One corruption model with its parameters and RNG seed. Only the fields
/// for the active kind are consulted; the factory helpers fill them in.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double variance = 0.05;  ///< gaussian: variance of the zero-mean additive term
    double rate = 0.02;      ///< poisson: event rate of the additive counts
    double low = -0.1;       ///< uniform: inclusive lower bound
    double high = 0.1;       ///< uniform: upper bound
    double density = 0.05;   ///< salt_pepper: total replacement probability
    /// When set (default), the poisson term is mean-centered (draw - rate) so
    /// the corruption adds no DC offset; clear it for raw additive counts.
    bool poisson_center = true;
    std::uint64_t seed = 0;

    static NoiseSpec gaussian(double variance, std::uint64_t seed);
    static NoiseSpec poisson(double rate, std::uint64_t seed, bool center = true);
    static NoiseSpec uniform(double low, double high, std::uint64_t seed);
    static NoiseSpec salt_pepper(double density, std::uint64_t seed);

    /// Throws std::invalid_argument when the active kind's parameters are
    /// out of range (variance/rate must be positive, low < high, density
    /// strictly inside (0,1)).
    void validate() const;
};

/// Applies the corruption model to a copy of the signal. Gaussian, uniform
/// and poisson perturbations are additive and i.i.d. per sample; salt_pepper
/// replaces each sample independently by 0 or 1 (probability density/2
/// each). Deterministic for a given spec (including seed).
std::vector<double> corrupt(const std::vector<double>& x, const NoiseSpec& spec);

}  // namespace ppgdn::noise
