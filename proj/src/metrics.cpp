#include "ppgdn/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace ppgdn::metrics {

namespace {

double reduction_from(double mse_noisy, double mse_denoised) {
    if (mse_noisy > 0.0) return 100.0 * (1.0 - mse_denoised / mse_noisy);
    return mse_denoised == 0.0 ? 0.0
                               : -std::numeric_limits<double>::infinity();
}

void check_consistent(double mse_noisy, double mse_denoised, double psnr_noisy,
                      double psnr_denoised, double reduction,
                      const char* what) {
    const double pn = psnr(mse_noisy);
    const double pd = psnr(mse_denoised);
    const bool pn_ok =
        (std::isinf(pn) && std::isinf(psnr_noisy)) || std::abs(pn - psnr_noisy) <= 1e-9;
    const bool pd_ok =
        (std::isinf(pd) && std::isinf(psnr_denoised)) ||
        std::abs(pd - psnr_denoised) <= 1e-9;
    if (!pn_ok || !pd_ok)
        throw std::logic_error(std::string(what) +
                               ": psnr fields disagree with the recorded mse");
    const double expect = reduction_from(mse_noisy, mse_denoised);
    const bool red_ok = (std::isinf(expect) && std::isinf(reduction)) ||
                        std::abs(expect - reduction) <= 1e-9;
    if (!red_ok)
        throw std::logic_error(
            std::string(what) +
            ": reduction_percent disagrees with the recorded mse pair");
}

}  // namespace

double mse(const Signal& x, const Signal& xhat) {
    if (x.empty())
        throw std::invalid_argument("mse: empty signals");
    if (x.size() != xhat.size())
        throw std::invalid_argument("mse: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - xhat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

double psnr(double mse_value) {
    if (mse_value < 0.0)
        throw std::invalid_argument("psnr: negative mse");
    if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse_value);
}

void EvalSummary::validate() const {
    check_consistent(mse_noisy, mse_denoised, psnr_noisy, psnr_denoised,
                     reduction_percent, "summary");
    std::size_t covered = 0;
    for (const auto& row : by_kind) {
        check_consistent(row.mse_noisy, row.mse_denoised, row.psnr_noisy,
                         row.psnr_denoised, row.reduction_percent,
                         "breakdown row");
        covered += row.count;
    }
    if (!by_kind.empty() && covered != window_count)
        throw std::logic_error(
            "summary: breakdown rows do not cover the window count");
}

EvalSummary evaluate(const dataset::WindowedDataset& test_set,
                     const DenoiseFn& model) {
    if (test_set.pairs.empty())
        throw std::invalid_argument("evaluate: empty test set");

    struct Acc {
        std::size_t count = 0;
        double noisy = 0.0;
        double denoised = 0.0;
    };
    Acc all;
    std::map<noise::NoiseKind, Acc> per_kind;

    for (const auto& pair : test_set.pairs) {
        const double m_noisy = mse(pair.noisy, pair.clean);
        const Signal denoised = model(pair.noisy);
        const double m_denoised = mse(denoised, pair.clean);
        all.count += 1;
        all.noisy += m_noisy;
        all.denoised += m_denoised;
        auto& k = per_kind[pair.noise_kind];
        k.count += 1;
        k.noisy += m_noisy;
        k.denoised += m_denoised;
    }

    auto finish = [](const Acc& acc, std::size_t& count, double& mse_noisy,
                     double& mse_denoised, double& psnr_noisy,
                     double& psnr_denoised, double& reduction) {
        count = acc.count;
        mse_noisy = acc.noisy / static_cast<double>(acc.count);
        mse_denoised = acc.denoised / static_cast<double>(acc.count);
        psnr_noisy = psnr(mse_noisy);
        psnr_denoised = psnr(mse_denoised);
        reduction = reduction_from(mse_noisy, mse_denoised);
    };

    EvalSummary summary;
    finish(all, summary.window_count, summary.mse_noisy, summary.mse_denoised,
           summary.psnr_noisy, summary.psnr_denoised,
           summary.reduction_percent);
    for (const auto& [kind, acc] : per_kind) {
        EvalBreakdownRow row;
        row.kind = kind;
        finish(acc, row.count, row.mse_noisy, row.mse_denoised, row.psnr_noisy,
               row.psnr_denoised, row.reduction_percent);
        summary.by_kind.push_back(row);
    }
    return summary;
}

}  // namespace ppgdn::metrics
