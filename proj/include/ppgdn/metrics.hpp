#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ppgdn/dataset.hpp"
#include "ppgdn/noise.hpp"

namespace ppgdn::metrics {

using Signal = std::vector<double>;

/// Mean squared difference over all entries. Throws std::invalid_argument
/// on length mismatch or empty inputs.
double mse(const Signal& x, const Signal& xhat);

/// 10 * log10(1 / mse), the unit-peak convention (all signals live in
/// [0,1]). mse == 0 reports +infinity; negative mse is rejected.
double psnr(double mse_value);

struct EvalBreakdownRow {
    noise::NoiseKind kind = noise::NoiseKind::gaussian;
    std::size_t count = 0;
    double mse_noisy = 0.0;
    double mse_denoised = 0.0;
    double psnr_noisy = 0.0;
    double psnr_denoised = 0.0;
    double reduction_percent = 0.0;
};

/// Aggregate evaluation of a denoiser over a paired test set. mse_noisy is
/// the pass-through baseline (the noisy window scored against the clean
/// one); reduction_percent = 100 * (1 - mse_denoised / mse_noisy).
struct EvalSummary {
    std::size_t window_count = 0;
    double mse_noisy = 0.0;
    double mse_denoised = 0.0;
    double psnr_noisy = 0.0;
    double psnr_denoised = 0.0;
    double reduction_percent = 0.0;
    std::vector<EvalBreakdownRow> by_kind;

    /// Throws std::logic_error when the derived fields disagree with the
    /// recorded MSEs beyond 1e-9.
    void validate() const;
};

using DenoiseFn = std::function<Signal(const Signal& noisy)>;

/// Runs the model over every pair, averages per-window MSEs in a fixed
/// order, and groups a breakdown by noise kind. Throws
/// std::invalid_argument on an empty test set.
EvalSummary evaluate(const dataset::WindowedDataset& test_set,
                     const DenoiseFn& model);

}  // namespace ppgdn::metrics
