#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "ppgdn/dataset.hpp"
#include "ppgdn/network.hpp"
#include "ppgdn/wavelet.hpp"

namespace ppgdn::denoiser {

using Signal = std::vector<double>;
/// Per-sub-signal gating weights a_1..a_{L+1}, each in [0,1].
using WeightVector = std::vector<double>;

/// x_hat = sum_i a_i * s_i. Throws std::invalid_argument when the weight
/// count differs from the column count.
Signal reconstruct(const wavelet::SubsignalMatrix& s, const WeightVector& a);

/// Mean of squared differences over all M*N entries of a batch.
double mse_loss(const Eigen::MatrixXd& xhat_batch,
                const Eigen::MatrixXd& x_batch);

/// Gradient of ||S a - x||^2 / N with respect to a: (2/N) * S^T (S a - x).
/// This is the upstream gradient handed to network::backward (scaled by 1/M
/// for batch averaging by the training loop).
WeightVector loss_grad_wrt_a(const wavelet::SubsignalMatrix& s,
                             const WeightVector& a, const Signal& x);

struct TrainConfig {
    int wavelet_order = 4;
    int level = 1;
    wavelet::Boundary boundary = wavelet::Boundary::symmetric;
    double learning_rate = 0.001;
    int batch_size = 100;
    int val_batch_size = 100;
    int max_epochs = 500;
    int patience = 20;  ///< epochs without validation improvement before stopping
    std::uint64_t seed = 0;

    void validate() const;  ///< throws std::invalid_argument
};

struct TrainReport {
    std::vector<double> train_mse;  ///< mean batch loss per epoch
    std::vector<double> val_mse;    ///< validation MSE per epoch
    int stopped_epoch = 0;          ///< number of epochs actually run
    int best_epoch = 0;             ///< 1-based epoch of the best validation MSE
    double best_val_mse = 0.0;
    double wall_seconds = 0.0;
};

/// Mini-batch training of the gating network: per noisy window build the
/// sub-signal matrix (cached across epochs), forward -> a, reconstruct,
/// MSE against the clean window, backpropagate through the reconstruction
/// into the network, Adam update. Early-stops after `patience` epochs
/// without validation improvement and returns the parameters of the best
/// epoch. A trailing partial batch is kept when it still has >= 2 windows.
std::pair<network::NetworkParams, TrainReport> train(
    const dataset::WindowedDataset& train_set,
    const dataset::WindowedDataset& val_set, const TrainConfig& config);

struct DenoiseResult {
    Signal denoised;
    WeightVector weights;
};

/// Inference path: decompose y, query the network for the gating weights,
/// reconstruct. y must match the network's input width.
DenoiseResult denoise(const network::NetworkParams& params, const Signal& y,
                      int wavelet_order, int level,
                      wavelet::Boundary boundary);
DenoiseResult denoise(const network::Checkpoint& ckpt, const Signal& y);

struct OracleResult {
    WeightVector weights;
    double mse = 0.0;
    /// Objective value after every accepted iteration (relaxed oracle only);
    /// non-increasing by construction.
    std::vector<double> objective_trace;
};

/// Globally optimal binary gating by exhaustive search over all 2^(L+1)
/// on/off patterns, minimizing ||S a - x||^2 / N. Ties prefer fewer active
/// columns, then the lexicographically smallest pattern. Refuses more than
/// 20 columns.
OracleResult binary_oracle(const wavelet::SubsignalMatrix& s, const Signal& x);

/// Projected gradient descent on ||S a - x||^2 / N over the box [0,1]^(L+1)
/// with backtracking line search (objective never increases). The problem
/// is convex, so with enough iterations the result dominates every binary
/// pattern. Runs from two starts (mid-box and the clamped least-squares
/// solution) and keeps the better.
OracleResult relaxed_oracle(const wavelet::SubsignalMatrix& s, const Signal& x,
                            int iters = 2000, double step = 1.0);

}  // namespace ppgdn::denoiser
