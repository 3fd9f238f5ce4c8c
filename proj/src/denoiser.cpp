#include "ppgdn/denoiser.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ppgdn::denoiser {

namespace {

Eigen::MatrixXd subsignal_to_matrix(const wavelet::SubsignalMatrix& s) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(s.signal_len),
                      static_cast<Eigen::Index>(s.columns.size()));
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
        if (s.columns[c].size() != s.signal_len)
            throw std::invalid_argument(
                "sub-signal matrix has ragged columns");
        for (std::size_t r = 0; r < s.signal_len; ++r)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                s.columns[c][r];
    }
    return m;
}

Eigen::VectorXd to_eigen(const Signal& x) {
    return Eigen::Map<const Eigen::VectorXd>(
        x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

Signal reconstruct(const wavelet::SubsignalMatrix& s, const WeightVector& a) {
    if (a.size() != s.columns.size())
        throw std::invalid_argument(
            "reconstruct: " + std::to_string(a.size()) + " weights for " +
            std::to_string(s.columns.size()) + " sub-signals");
    Signal out(s.signal_len, 0.0);
    for (std::size_t c = 0; c < a.size(); ++c) {
        if (s.columns[c].size() != s.signal_len)
            throw std::invalid_argument(
                "reconstruct: sub-signal length mismatch");
        const double w = a[c];
        for (std::size_t r = 0; r < s.signal_len; ++r)
            out[r] += w * s.columns[c][r];
    }
    return out;
}

double mse_loss(const Eigen::MatrixXd& xhat_batch,
                const Eigen::MatrixXd& x_batch) {
    if (xhat_batch.rows() != x_batch.rows() ||
        xhat_batch.cols() != x_batch.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    if (xhat_batch.size() == 0)
        throw std::invalid_argument("mse_loss: empty batch");
    return (xhat_batch - x_batch).squaredNorm() /
           static_cast<double>(xhat_batch.size());
}

WeightVector loss_grad_wrt_a(const wavelet::SubsignalMatrix& s,
                             const WeightVector& a, const Signal& x) {
    if (a.size() != s.columns.size() || x.size() != s.signal_len)
        throw std::invalid_argument("loss_grad_wrt_a: dimension mismatch");
    const Eigen::MatrixXd sm = subsignal_to_matrix(s);
    const Eigen::VectorXd av = to_eigen(a);
    const Eigen::VectorXd residual = sm * av - to_eigen(x);
    const Eigen::VectorXd g =
        (2.0 / static_cast<double>(x.size())) * (sm.transpose() * residual);
    return WeightVector(g.data(), g.data() + g.size());
}

void TrainConfig::validate() const {
    if (wavelet_order < 1 || wavelet_order > 10)
        throw std::invalid_argument("train config: wavelet order must be 1..10");
    if (level < 1)
        throw std::invalid_argument("train config: level must be >= 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("train config: learning rate must be > 0");
    if (batch_size < 2 || val_batch_size < 2)
        throw std::invalid_argument("train config: batch sizes must be >= 2");
    if (max_epochs < 1)
        throw std::invalid_argument("train config: max epochs must be >= 1");
    if (patience < 1)
        throw std::invalid_argument("train config: patience must be >= 1");
}

std::pair<network::NetworkParams, TrainReport> train(
    const dataset::WindowedDataset& train_set,
    const dataset::WindowedDataset& val_set, const TrainConfig& config) {
    config.validate();
    if (train_set.pairs.empty() || val_set.pairs.empty())
        throw std::invalid_argument("train: empty dataset");
    const std::size_t n = train_set.window_len;
    if (n < 8)
        throw std::invalid_argument("train: windows too short for the network");
    if (train_set.pairs.size() < static_cast<std::size_t>(config.batch_size))
        throw std::invalid_argument(
            "train: training set smaller than one batch");

    const auto bank = wavelet::daubechies_filters(config.wavelet_order);
    const auto check_pairs = [n](const dataset::WindowedDataset& ds) {
        for (const auto& p : ds.pairs)
            if (p.clean.size() != n || p.noisy.size() != n)
                throw std::invalid_argument(
                    "train: window length inconsistent with the dataset");
    };
    check_pairs(train_set);
    check_pairs(val_set);

    // The sub-signal matrix depends only on the noisy input, so it is
    // computed once per window and reused across every epoch.
    const auto precompute = [&](const dataset::WindowedDataset& ds) {
        std::vector<Eigen::MatrixXd> mats;
        mats.reserve(ds.pairs.size());
        for (const auto& p : ds.pairs)
            mats.push_back(subsignal_to_matrix(wavelet::subsignal_matrix(
                p.noisy, bank, config.level, config.boundary)));
        return mats;
    };
    const auto s_train = precompute(train_set);
    const auto s_val = precompute(val_set);

    const auto pack_rows = [n](const dataset::WindowedDataset& ds,
                               const std::vector<std::size_t>& idx) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(idx.size()),
                          static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < idx.size(); ++j)
            for (std::size_t i = 0; i < n; ++i)
                m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                    ds.pairs[idx[j]].noisy[i];
        return m;
    };

    const auto start_time = std::chrono::steady_clock::now();
    auto params = network::init_network(static_cast<int>(n), config.level + 1,
                                        config.seed);
    auto adam = network::init_adam(params);
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

    TrainReport report;
    network::NetworkParams best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_without_improvement = 0;

    std::vector<std::size_t> order(train_set.pairs.size());
    std::iota(order.begin(), order.end(), 0);

    const double nd = static_cast<double>(n);
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_sq = 0.0;
        std::size_t epoch_entries = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(
                order.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::size_t m = stop - start;
            if (m < 2) continue;  // batch statistics need two windows
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(stop));

            auto fwd = network::forward(params, pack_rows(train_set, idx),
                                        network::Mode::train);
            Eigen::MatrixXd upstream(static_cast<Eigen::Index>(m),
                                     config.level + 1);
            double batch_sq = 0.0;
            const double scale = 2.0 / (static_cast<double>(m) * nd);
            for (std::size_t j = 0; j < m; ++j) {
                const auto& sj = s_train[idx[j]];
                const Eigen::VectorXd a =
                    fwd.weights.row(static_cast<Eigen::Index>(j)).transpose();
                Eigen::VectorXd residual =
                    sj * a - to_eigen(train_set.pairs[idx[j]].clean);
                batch_sq += residual.squaredNorm();
                upstream.row(static_cast<Eigen::Index>(j)) =
                    scale * (sj.transpose() * residual).transpose();
            }
            if (!std::isfinite(batch_sq))
                throw std::runtime_error(
                    "train: non-finite loss at epoch " +
                    std::to_string(epoch) + " (diverged)");
            auto grads = network::backward(params, fwd.cache, upstream);
            network::adam_step(params, grads, adam, config.learning_rate);
            epoch_sq += batch_sq;
            epoch_entries += m * n;
        }
        report.train_mse.push_back(epoch_sq /
                                   static_cast<double>(epoch_entries));

        double val_sq = 0.0;
        std::size_t val_entries = 0;
        for (std::size_t start = 0; start < val_set.pairs.size();
             start += static_cast<std::size_t>(config.val_batch_size)) {
            const std::size_t stop =
                std::min(val_set.pairs.size(),
                         start + static_cast<std::size_t>(config.val_batch_size));
            std::vector<std::size_t> idx(stop - start);
            std::iota(idx.begin(), idx.end(), start);
            const Eigen::MatrixXd out =
                network::forward_infer(params, pack_rows(val_set, idx));
            for (std::size_t j = 0; j < idx.size(); ++j) {
                const Eigen::VectorXd a =
                    out.row(static_cast<Eigen::Index>(j)).transpose();
                val_sq += (s_val[idx[j]] * a -
                           to_eigen(val_set.pairs[idx[j]].clean))
                              .squaredNorm();
                val_entries += n;
            }
        }
        const double val_mse = val_sq / static_cast<double>(val_entries);
        if (!std::isfinite(val_mse))
            throw std::runtime_error("train: non-finite validation loss at epoch " +
                                     std::to_string(epoch));
        report.val_mse.push_back(val_mse);
        report.stopped_epoch = epoch;

        if (val_mse < best_val) {
            best_val = val_mse;
            best_params = params;
            report.best_epoch = epoch;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
        }
        if (epochs_without_improvement >= config.patience) break;
    }

    report.best_val_mse = best_val;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_time)
            .count();
    return {std::move(best_params), std::move(report)};
}

DenoiseResult denoise(const network::NetworkParams& params, const Signal& y,
                      int wavelet_order, int level,
                      wavelet::Boundary boundary) {
    if (params.widths.size() != 5)
        throw std::invalid_argument("denoise: malformed parameters");
    if (y.size() != static_cast<std::size_t>(params.widths[0]))
        throw std::invalid_argument(
            "denoise: signal length " + std::to_string(y.size()) +
            " does not match the model input width " +
            std::to_string(params.widths[0]));
    if (params.widths[4] != level + 1)
        throw std::invalid_argument(
            "denoise: model emits " + std::to_string(params.widths[4]) +
            " weights but level " + std::to_string(level) + " needs " +
            std::to_string(level + 1));

    const auto s = wavelet::subsignal_matrix(
        y, wavelet::daubechies_filters(wavelet_order), level, boundary);
    Eigen::MatrixXd batch(1, static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i)
        batch(0, static_cast<Eigen::Index>(i)) = y[i];
    const Eigen::MatrixXd out = network::forward_infer(params, batch);

    DenoiseResult res;
    res.weights.assign(out.data(), out.data() + out.size());
    res.denoised = reconstruct(s, res.weights);
    return res;
}

DenoiseResult denoise(const network::Checkpoint& ckpt, const Signal& y) {
    return denoise(ckpt.params, y, ckpt.wavelet_order, ckpt.level,
                   wavelet::boundary_from_name(ckpt.boundary));
}

OracleResult binary_oracle(const wavelet::SubsignalMatrix& s, const Signal& x) {
    const std::size_t k = s.columns.size();
    if (k == 0) throw std::invalid_argument("binary_oracle: no sub-signals");
    if (k > 20)
        throw std::invalid_argument(
            "binary_oracle: " + std::to_string(k) +
            " sub-signals exceed the exhaustive-search bound of 20");
    if (x.size() != s.signal_len)
        throw std::invalid_argument("binary_oracle: signal length mismatch");

    const double nd = static_cast<double>(x.size());
    OracleResult best;
    best.mse = std::numeric_limits<double>::infinity();
    int best_ones = 0;

    Signal xhat(x.size());
    std::vector<double> a(k);
    for (std::uint64_t mask = 0; mask < (1ULL << k); ++mask) {
        std::fill(xhat.begin(), xhat.end(), 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            a[c] = (mask >> c) & 1ULL ? 1.0 : 0.0;
            if (a[c] == 1.0)
                for (std::size_t r = 0; r < x.size(); ++r)
                    xhat[r] += s.columns[c][r];
        }
        double sq = 0.0;
        for (std::size_t r = 0; r < x.size(); ++r) {
            const double d = xhat[r] - x[r];
            sq += d * d;
        }
        const double m = sq / nd;
        const int ones = std::popcount(mask);
        if (m < best.mse ||
            (m == best.mse &&
             (ones < best_ones || (ones == best_ones && a < best.weights)))) {
            best.mse = m;
            best.weights = a;
            best_ones = ones;
        }
    }
    return best;
}

OracleResult relaxed_oracle(const wavelet::SubsignalMatrix& s, const Signal& x,
                            int iters, double step) {
    const std::size_t k = s.columns.size();
    if (k == 0 || x.size() != s.signal_len)
        throw std::invalid_argument("relaxed_oracle: dimension mismatch");
    if (iters < 1 || !(step > 0.0))
        throw std::invalid_argument("relaxed_oracle: bad iteration budget");

    const Eigen::MatrixXd sm = subsignal_to_matrix(s);
    const Eigen::VectorXd xe = to_eigen(x);
    if (!sm.allFinite() || !xe.allFinite())
        throw std::runtime_error("relaxed_oracle: non-finite input values");

    const double nd = static_cast<double>(x.size());
    const auto objective = [&](const Eigen::VectorXd& a) {
        return (sm * a - xe).squaredNorm() / nd;
    };
    const auto gradient = [&](const Eigen::VectorXd& a) {
        return Eigen::VectorXd((2.0 / nd) * (sm.transpose() * (sm * a - xe)));
    };
    const auto clamp01 = [](Eigen::VectorXd v) {
        return Eigen::VectorXd(v.cwiseMax(0.0).cwiseMin(1.0));
    };

    const auto run = [&](Eigen::VectorXd a) {
        OracleResult res;
        double f = objective(a);
        res.objective_trace.push_back(f);
        for (int it = 0; it < iters; ++it) {
            const Eigen::VectorXd g = gradient(a);
            double t = step;
            bool accepted = false;
            while (t >= 1e-16) {
                const Eigen::VectorXd cand = clamp01(a - t * g);
                const double fc = objective(cand);
                if (fc < f) {
                    a = cand;
                    f = fc;
                    res.objective_trace.push_back(f);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;  // stationary within machine precision
        }
        res.mse = f;
        res.weights.assign(a.data(), a.data() + a.size());
        return res;
    };

    // mid-box start plus the clamped unconstrained optimum
    auto mid = run(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 0.5));
    Eigen::VectorXd ls = sm.colPivHouseholderQr().solve(xe);
    auto warm = run(clamp01(ls));
    return warm.mse < mid.mse ? warm : mid;
}

}  // namespace ppgdn::denoiser
