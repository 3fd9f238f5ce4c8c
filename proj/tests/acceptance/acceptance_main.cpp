// Acceptance gate for the wavelet-gating denoiser. Each criterion prints
// exactly one line: "<ID> PASS — detail", "<ID> FAIL — detail" or
// "<ID> SKIP — detail". Run with criterion IDs as arguments (default: all).
// Exit code 0 when everything executed passed, 1 on any failure, 77 when the
// only requested criterion was skipped.
//
//   P1  multilevel analysis/synthesis round trip across the whole filter bank
//   P2  band-limited components sum back to the analyzed signal
//   P3  end-to-end loss gradient matches central finite differences
//   P4  exhaustive binary gating oracle vs. an independent enumerator, and
//       box-relaxed gating dominates the best binary gating
//   P5  desk-scale training beats the noisy baseline by fixed ratios
//   P6  deeper decomposition does not hurt impulsive-noise denoising
//   P7  PSNR identities and evaluation-summary consistency
//   P8  optional full-corpus run on user-supplied recordings (informative)

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppgdn/dataset.hpp"
#include "ppgdn/denoiser.hpp"
#include "ppgdn/metrics.hpp"
#include "ppgdn/network.hpp"
#include "ppgdn/noise.hpp"
#include "ppgdn/wavelet.hpp"

using namespace ppgdn;
using Signal = std::vector<double>;

namespace {

struct Outcome {
    enum class Status { pass, fail, skip } status = Status::fail;
    std::string detail;
};

Outcome pass(const std::string& detail) {
    return {Outcome::Status::pass, detail};
}
Outcome fail(const std::string& detail) {
    return {Outcome::Status::fail, detail};
}
Outcome skip(const std::string& detail) {
    return {Outcome::Status::skip, detail};
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

Signal random_signal(std::size_t n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Signal x(n);
    for (auto& v : x) v = dist(rng);
    return x;
}

// ---------------------------------------------------------------------------
// P1 / P2 — full filter-bank sweep: orders 1..10, levels 1..8,
// lengths {256, 777, 1000, 1024}, 5 seeds, symmetric extension.

constexpr double kRoundTripTol = 1e-8;
constexpr double kSweepBudgetSeconds = 30.0;
const std::vector<std::size_t> kSweepLengths = {256, 777, 1000, 1024};

template <typename PerConfig>
std::size_t filter_bank_sweep(const PerConfig& per_config) {
    std::size_t configs = 0;
    for (int order = 1; order <= 10; ++order) {
        const auto bank = wavelet::daubechies_filters(order);
        for (int level = 1; level <= 8; ++level)
            for (const std::size_t len : kSweepLengths)
                for (std::uint64_t seed = 0; seed < 5; ++seed) {
                    const std::uint64_t mix =
                        ((static_cast<std::uint64_t>(order) * 31 + level) *
                             131 +
                         len) *
                            257 +
                        seed;
                    per_config(bank, order, level,
                               random_signal(len, mix, -1.0, 1.0));
                    ++configs;
                }
    }
    return configs;
}

double max_abs_diff(const Signal& a, const Signal& b) {
    if (a.size() != b.size()) return 1e300;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

Outcome run_p1() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_config;
    const std::size_t configs = filter_bank_sweep(
        [&](const wavelet::FilterBank& bank, int order, int level,
            const Signal& x) {
            const auto coeffs = wavelet::wavedec(
                x, bank, level, wavelet::Boundary::symmetric);
            const double err = max_abs_diff(wavelet::waverec(coeffs), x);
            if (err > worst) {
                worst = err;
                worst_config = "db" + std::to_string(order) + " level " +
                               std::to_string(level) + " n=" +
                               std::to_string(x.size());
            }
        });
    const double secs = seconds_since(t0);
    std::string detail = "worst round-trip error " + fmt(worst) + " (" +
                         worst_config + ") over " + std::to_string(configs) +
                         " configurations in " + fmt(secs) + " s";
    if (worst >= kRoundTripTol) return fail(detail);
    if (secs >= kSweepBudgetSeconds)
        return fail(detail + "; exceeded the " + fmt(kSweepBudgetSeconds) +
                    " s budget");
    return pass(detail);
}

Outcome run_p2() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_config;
    const std::size_t configs = filter_bank_sweep(
        [&](const wavelet::FilterBank& bank, int order, int level,
            const Signal& x) {
            const auto s = wavelet::subsignal_matrix(
                x, bank, level, wavelet::Boundary::symmetric);
            Signal sum(x.size(), 0.0);
            for (const auto& column : s.columns)
                for (std::size_t i = 0; i < x.size(); ++i)
                    sum[i] += column[i];
            const double err = max_abs_diff(sum, x);
            if (err > worst) {
                worst = err;
                worst_config = "db" + std::to_string(order) + " level " +
                               std::to_string(level) + " n=" +
                               std::to_string(x.size());
            }
        });
    const double secs = seconds_since(t0);
    std::string detail = "worst additivity error " + fmt(worst) + " (" +
                         worst_config + ") over " + std::to_string(configs) +
                         " configurations in " + fmt(secs) + " s";
    if (worst >= kRoundTripTol) return fail(detail);
    if (secs >= kSweepBudgetSeconds)
        return fail(detail + "; exceeded the " + fmt(kSweepBudgetSeconds) +
                    " s budget");
    return pass(detail);
}

// ---------------------------------------------------------------------------
// P3 — finite-difference check of the end-to-end gradient on a tiny
// pipeline: 16-sample windows, 2-level db1 bands, batch of 4.

Outcome run_p3() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr int n = 16;
    constexpr int level = 2;
    constexpr int batch = 4;
    constexpr double h = 1e-5;
    constexpr double tol = 1e-4;
    const auto bank = wavelet::daubechies_filters(1);

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Eigen::MatrixXd noisy(batch, n), clean(batch, n);
        std::vector<Eigen::MatrixXd> s(batch);
        for (int j = 0; j < batch; ++j) {
            const Signal y = random_signal(n, 900 + seed * 17 + j, 0.0, 1.0);
            const Signal c = random_signal(n, 400 + seed * 29 + j, 0.0, 1.0);
            for (int i = 0; i < n; ++i) {
                noisy(j, i) = y[i];
                clean(j, i) = c[i];
            }
            const auto sub = wavelet::subsignal_matrix(
                y, bank, level, wavelet::Boundary::symmetric);
            s[j].resize(n, level + 1);
            for (int c2 = 0; c2 <= level; ++c2)
                for (int i = 0; i < n; ++i)
                    s[j](i, c2) = sub.columns[static_cast<std::size_t>(c2)]
                                             [static_cast<std::size_t>(i)];
        }

        const auto total_loss = [&](network::NetworkParams& p) {
            auto fwd = network::forward(p, noisy, network::Mode::train);
            double acc = 0.0;
            for (int j = 0; j < batch; ++j) {
                const Eigen::VectorXd r =
                    s[j] * fwd.weights.row(j).transpose() -
                    clean.row(j).transpose();
                acc += r.squaredNorm();
            }
            return acc / (batch * n);
        };

        auto params = network::init_network(n, level + 1, seed);
        auto fwd = network::forward(params, noisy, network::Mode::train);
        Eigen::MatrixXd upstream(batch, level + 1);
        for (int j = 0; j < batch; ++j) {
            const Eigen::VectorXd r = s[j] * fwd.weights.row(j).transpose() -
                                      clean.row(j).transpose();
            upstream.row(j) =
                (2.0 / (batch * n)) * (s[j].transpose() * r).transpose();
        }
        auto grads = network::backward(params, fwd.cache, upstream);
        auto grad_refs = network::trainable_tensors(grads);
        const auto param_refs = network::trainable_tensors(params);

        for (std::size_t t = 0; t < param_refs.size(); ++t) {
            for (std::size_t i = 0; i < param_refs[t].size; ++i) {
                auto probe = [&](double delta) {
                    network::NetworkParams copy = params;
                    network::trainable_tensors(copy)[t].data[i] += delta;
                    return total_loss(copy);
                };
                const double fd = (probe(h) - probe(-h)) / (2.0 * h);
                const double an = grad_refs[t].data[i];
                const double rel = std::abs(fd - an) /
                                   std::max({1.0, std::abs(fd), std::abs(an)});
                worst = std::max(worst, rel);
            }
        }
    }
    const double secs = seconds_since(t0);
    const std::string detail = "worst relative gradient error " + fmt(worst) +
                               " over 10 seeds in " + fmt(secs) + " s";
    if (worst >= tol) return fail(detail);
    if (secs >= 10.0) return fail(detail + "; exceeded the 10 s budget");
    return pass(detail);
}

// ---------------------------------------------------------------------------
// P4 — binary gating oracle vs. an independent enumerator, and dominance of
// the box relaxation, over 200 random instances with at most 9 bands.

/// Independent exhaustive enumerator, written against the same objective but
/// with its own recursion: fewer active bands win ties, then the
/// lexicographically smaller 0/1 vector.
struct EnumeratorResult {
    std::vector<double> weights;
    double mse = 0.0;
};

double direct_mse(const wavelet::SubsignalMatrix& s,
                  const std::vector<double>& a, const Signal& x) {
    double acc = 0.0;
    for (std::size_t r = 0; r < x.size(); ++r) {
        double xhat = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c)
            xhat += a[c] * s.columns[c][r];
        const double d = xhat - x[r];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

int ones_in(const std::vector<double>& a) {
    int count = 0;
    for (const double v : a) count += (v == 1.0);
    return count;
}

void enumerate_rec(const wavelet::SubsignalMatrix& s, const Signal& x,
                   std::vector<double>& a, std::size_t pos,
                   EnumeratorResult& best) {
    if (pos == a.size()) {
        const double m = direct_mse(s, a, x);
        if (best.weights.empty() || m < best.mse ||
            (m == best.mse && (ones_in(a) < ones_in(best.weights) ||
                               (ones_in(a) == ones_in(best.weights) &&
                                a < best.weights)))) {
            best.mse = m;
            best.weights = a;
        }
        return;
    }
    a[pos] = 0.0;
    enumerate_rec(s, x, a, pos + 1, best);
    a[pos] = 1.0;
    enumerate_rec(s, x, a, pos + 1, best);
}

Outcome run_p4() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr double dominance_slack = 1e-9;
    std::mt19937_64 rng(20240817);
    int checked = 0;
    double worst_gap = -1e300;
    for (int instance = 0; instance < 200; ++instance) {
        const int order = 1 + static_cast<int>(rng() % 4);
        const int level = 1 + static_cast<int>(rng() % 8);  // <= 9 bands
        const std::size_t n = 32 + rng() % 225;             // 32..256
        const Signal y = random_signal(n, rng(), -1.0, 1.0);
        const Signal x = random_signal(n, rng(), -1.0, 1.0);
        const auto s = wavelet::subsignal_matrix(
            y, wavelet::daubechies_filters(order), level,
            wavelet::Boundary::symmetric);

        const auto binary = denoiser::binary_oracle(s, x);
        EnumeratorResult expected;
        std::vector<double> a(s.columns.size(), 0.0);
        enumerate_rec(s, x, a, 0, expected);
        if (binary.weights != expected.weights || binary.mse != expected.mse)
            return fail("binary oracle disagrees with the independent "
                        "enumerator on instance " +
                        std::to_string(instance) + " (db" +
                        std::to_string(order) + ", level " +
                        std::to_string(level) + ", n=" + std::to_string(n) +
                        ")");

        const auto relaxed = denoiser::relaxed_oracle(s, x);
        const double gap = relaxed.mse - binary.mse;
        worst_gap = std::max(worst_gap, gap);
        if (gap > dominance_slack)
            return fail("box relaxation lost to the best binary gating by " +
                        fmt(gap) + " on instance " + std::to_string(instance));
        ++checked;
    }
    const double secs = seconds_since(t0);
    const std::string detail =
        std::to_string(checked) +
        " instances: enumerator matches exactly; worst relaxed-minus-binary "
        "gap " +
        fmt(worst_gap) + " in " + fmt(secs) + " s";
    if (secs >= 60.0) return fail(detail + "; exceeded the 60 s budget");
    return pass(detail);
}

// ---------------------------------------------------------------------------
// P5 / P6 — desk-scale training runs on the synthetic pulse corpus
// (640 windows of 1000 samples, split 512/64/64).

dataset::CorpusSplit desk_corpus(const std::vector<noise::NoiseSpec>& specs) {
    std::vector<dataset::SourceWindow> source;
    std::mt19937_64 seed_gen(424242);
    const dataset::PulseConfig pulse;  // 10 beats, 75 bpm, 125 Hz -> n=1000
    for (int w = 0; w < 640; ++w) {
        dataset::SourceWindow sw;
        sw.samples = dataset::synth_pulse(pulse, seed_gen());
        sw.record_id = "synth-" + std::to_string(w);
        source.push_back(std::move(sw));
    }
    return dataset::make_corpus(source, specs, {512, 64, 64}, 99);
}

metrics::EvalSummary train_and_eval(const dataset::CorpusSplit& corpus,
                                    int level, int wavelet_order,
                                    denoiser::TrainReport* report_out) {
    denoiser::TrainConfig cfg;  // defaults: lr 0.001, batch 100, <=500 epochs
    cfg.wavelet_order = wavelet_order;
    cfg.level = level;
    cfg.seed = 0;
    auto [params, report] = denoiser::train(corpus.train, corpus.val, cfg);
    if (report_out) *report_out = report;
    const auto summary = metrics::evaluate(
        corpus.test, [&, &p = params](const Signal& noisy) {
            return denoiser::denoise(p, noisy, wavelet_order, level,
                                     wavelet::Boundary::symmetric)
                .denoised;
        });
    summary.validate();
    return summary;
}

Outcome run_p5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto corpus = desk_corpus({noise::NoiseSpec::gaussian(0.05, 0),
                                     noise::NoiseSpec::salt_pepper(0.05, 0)});
    denoiser::TrainReport report;
    const auto summary = train_and_eval(corpus, 5, 4, &report);

    double gaussian_ratio = -1.0, salt_ratio = -1.0;
    for (const auto& row : summary.by_kind) {
        if (row.kind == noise::NoiseKind::gaussian)
            gaussian_ratio = row.mse_denoised / row.mse_noisy;
        if (row.kind == noise::NoiseKind::salt_pepper)
            salt_ratio = row.mse_denoised / row.mse_noisy;
    }
    const double secs = seconds_since(t0);
    const std::string detail =
        "test/noisy MSE ratio " + fmt(gaussian_ratio) +
        " gaussian (need <= 0.7), " + fmt(salt_ratio) +
        " salt-and-pepper (need <= 0.6); " +
        std::to_string(report.stopped_epoch) + " epochs in " + fmt(secs) +
        " s";
    if (gaussian_ratio < 0.0 || salt_ratio < 0.0)
        return fail("missing per-noise-kind rows; " + detail);
    if (gaussian_ratio > 0.7 || salt_ratio > 0.6) return fail(detail);
    if (secs >= 600.0) return fail(detail + "; exceeded the 600 s budget");
    return pass(detail);
}

Outcome run_p6() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto corpus = desk_corpus({noise::NoiseSpec::salt_pepper(0.05, 0)});
    double mse_by_level[3] = {0, 0, 0};
    const int levels[3] = {2, 5, 8};
    std::string detail;
    for (int i = 0; i < 3; ++i) {
        denoiser::TrainReport report;
        mse_by_level[i] =
            train_and_eval(corpus, levels[i], 4, &report).mse_denoised;
        detail += (i ? ", " : "") + std::string("level ") +
                  std::to_string(levels[i]) + ": MSE " +
                  fmt(mse_by_level[i]) + " (" +
                  std::to_string(report.stopped_epoch) + " epochs)";
    }
    const double secs = seconds_since(t0);
    detail += "; total " + fmt(secs) + " s";
    if (mse_by_level[2] > mse_by_level[0])
        return fail("deeper decomposition lost on impulsive noise: " + detail);
    if (secs >= 1800.0) return fail(detail + "; exceeded the 1800 s budget");
    return pass(detail);
}

// ---------------------------------------------------------------------------
// P7 — exact PSNR identities and summary self-consistency.

Outcome run_p7() {
    if (metrics::psnr(1.0) != 0.0)
        return fail("psnr(1) = " + fmt(metrics::psnr(1.0)) +
                    " dB, expected exactly 0");
    if (metrics::psnr(0.01) != 20.0)
        return fail("psnr(0.01) = " + fmt(metrics::psnr(0.01)) +
                    " dB, expected exactly 20");

    // every emitted summary must satisfy its internal identities, and a
    // tampered summary must be rejected
    std::vector<dataset::SourceWindow> source;
    std::mt19937_64 seed_gen(7);
    dataset::PulseConfig pulse;
    pulse.beats = 2;
    pulse.sample_rate = 40.0;
    for (int w = 0; w < 8; ++w)
        source.push_back(
            {dataset::synth_pulse(pulse, seed_gen()), "w" + std::to_string(w),
             0});
    const auto corpus = dataset::make_corpus(
        source,
        {noise::NoiseSpec::gaussian(0.05, 0),
         noise::NoiseSpec::uniform(-0.1, 0.1, 0)},
        {0, 0, 8}, 3);
    auto summary = metrics::evaluate(
        corpus.test, [](const Signal& noisy) { return noisy; });
    try {
        summary.validate();
    } catch (const std::exception& e) {
        return fail(std::string("evaluation summary failed its own "
                                "consistency check: ") +
                    e.what());
    }
    auto tampered = summary;
    tampered.mse_denoised *= 1.5;
    bool rejected = false;
    try {
        tampered.validate();
    } catch (const std::logic_error&) {
        rejected = true;
    }
    if (!rejected)
        return fail("a tampered summary passed the consistency check");
    return pass("psnr(1) = 0 dB and psnr(0.01) = 20 dB exactly; summary "
                "consistency enforced");
}

// ---------------------------------------------------------------------------
// P8 — optional full-scale run on user-supplied recordings (directory of
// CSV files with a PLETH column at 125 Hz). Informative: reductions are
// reported against the expected bands but do not gate.

Outcome run_p8() {
    const char* dir = std::getenv("PPGDN_BIDMC_DIR");
    if (dir == nullptr || *dir == '\0')
        return skip("set PPGDN_BIDMC_DIR to a directory of PLETH CSV "
                    "recordings to run the full-corpus check");
    const auto t0 = std::chrono::steady_clock::now();

    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        return fail(std::string("no .csv files found in ") + dir);

    std::vector<dataset::SourceWindow> source;
    for (const auto& file : files) {
        const auto record = dataset::load_record(file, "PLETH", 125.0);
        for (auto& sw : dataset::to_source_windows(
                 dataset::window(record, 8.0), record.subject_id))
            source.push_back(std::move(sw));
    }
    const dataset::SplitCounts split{3873, 240, 240};
    if (source.size() < split.train + split.val + split.test)
        return fail("found " + std::to_string(source.size()) +
                    " windows, need " +
                    std::to_string(split.train + split.val + split.test));

    const auto corpus = dataset::make_corpus(
        source,
        {noise::NoiseSpec::gaussian(0.05, 0), noise::NoiseSpec::poisson(0.02, 0),
         noise::NoiseSpec::uniform(-0.1, 0.1, 0),
         noise::NoiseSpec::salt_pepper(0.05, 0)},
        split, 0);

    denoiser::TrainConfig cfg;  // defaults: lr 0.001, batch 100, <=500 epochs
    cfg.wavelet_order = 10;
    cfg.level = 8;
    cfg.seed = 0;
    auto [params, report] = denoiser::train(corpus.train, corpus.val, cfg);
    const auto summary = metrics::evaluate(
        corpus.test, [&, &p = params](const Signal& noisy) {
            return denoiser::denoise(p, noisy, 10, 8,
                                     wavelet::Boundary::symmetric)
                .denoised;
        });
    summary.validate();

    std::string detail = "reductions:";
    for (const auto& row : summary.by_kind) {
        detail += " " + noise::kind_name(row.kind) + " " +
                  fmt(row.reduction_percent) + "%";
        if (row.kind == noise::NoiseKind::salt_pepper)
            detail += (row.reduction_percent >= 40.0 &&
                       row.reduction_percent <= 80.0)
                          ? " (in 40-80 band)"
                          : " (outside 40-80 band)";
        if (row.kind == noise::NoiseKind::gaussian)
            detail += (row.reduction_percent >= 35.0 &&
                       row.reduction_percent <= 70.0)
                          ? " (in 35-70 band)"
                          : " (outside 35-70 band)";
    }
    detail += "; " + std::to_string(report.stopped_epoch) + " epochs in " +
              fmt(seconds_since(t0)) + " s (informative, non-gating)";
    return pass(detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
        {"P1", run_p1}, {"P2", run_p2}, {"P3", run_p3}, {"P4", run_p4},
        {"P5", run_p5}, {"P6", run_p6}, {"P7", run_p7}, {"P8", run_p8}};

    std::vector<std::string> requested;
    for (int i = 1; i < argc; ++i) requested.emplace_back(argv[i]);
    if (requested.empty())
        for (const auto& [name, fn] : all) requested.push_back(name);

    int failures = 0;
    int skips = 0;
    int executed = 0;
    for (const auto& name : requested) {
        const auto it =
            std::find_if(all.begin(), all.end(),
                         [&](const auto& c) { return c.first == name; });
        if (it == all.end()) {
            std::cerr << "unknown criterion '" << name
                      << "' (valid: P1..P8)\n";
            return 2;
        }
        ++executed;
        Outcome outcome;
        try {
            outcome = it->second();
        } catch (const std::exception& e) {
            outcome = fail(std::string("unexpected exception: ") + e.what());
        }
        const char* label = outcome.status == Outcome::Status::pass ? "PASS"
                            : outcome.status == Outcome::Status::fail
                                ? "FAIL"
                                : "SKIP";
        std::cout << name << " " << label << " — " << outcome.detail
                  << std::endl;
        failures += outcome.status == Outcome::Status::fail;
        skips += outcome.status == Outcome::Status::skip;
    }
    if (failures > 0) return 1;
    if (skips == executed) return 77;  // everything requested was skipped
    return 0;
}
