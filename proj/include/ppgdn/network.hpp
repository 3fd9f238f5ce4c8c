#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ppgdn::network {

/// One dense layer with batch normalization (hidden layers only use the
/// normalization fields). Weight matrices are stored input-dim x output-dim;
/// batches multiply from the left as rows.
struct HiddenLayer {
    Eigen::MatrixXd weight;        // in x out
    Eigen::VectorXd bias;          // out
    Eigen::VectorXd bn_scale;      // out
    Eigen::VectorXd bn_shift;      // out
    Eigen::VectorXd running_mean;  // out
    Eigen::VectorXd running_var;   // out
};

/// Three halving hidden layers (dense -> batch norm -> ReLU) and a dense
/// sigmoid output layer. widths = [N, N/2, N/4, N/8, output].
struct NetworkParams {
    std::vector<HiddenLayer> hidden;
    Eigen::MatrixXd out_weight;
    Eigen::VectorXd out_bias;
    std::vector<int> widths;
    /// Bumped on every parameter mutation so a stale ForwardCache can be
    /// detected by backward().
    std::uint64_t revision = 0;
};

/// Deterministic per seed. Weights are uniform Xavier
/// (+-sqrt(6/(fan_in+fan_out))); biases and shifts zero, scales one,
/// running mean 0 / variance 1. Requires n >= 8 so every hidden width is
/// at least 1, and output_width >= 1.
NetworkParams init_network(int n, int output_width, std::uint64_t seed);

enum class Mode { train, infer };

struct LayerCache {
    Eigen::MatrixXd affine;      // M x out, before normalization
    Eigen::MatrixXd normalized;  // (affine - mean) / sqrt(var + eps)
    Eigen::VectorXd batch_mean;
    Eigen::VectorXd batch_var;   // biased
    Eigen::VectorXd inv_std;
    Eigen::MatrixXd activated;   // ReLU(scale * normalized + shift)
};

struct ForwardCache {
    Eigen::MatrixXd input;
    std::vector<LayerCache> layers;
    Eigen::MatrixXd logits;
    Eigen::MatrixXd output;  // sigmoid(logits), strictly in (0,1)
    std::uint64_t params_revision = 0;
    bool train_mode = false;
};

struct ForwardResult {
    Eigen::MatrixXd weights;  // M x output_width
    ForwardCache cache;
};

/// Hidden layers apply affine -> batch norm -> ReLU, the output layer
/// affine -> sigmoid. Train mode uses batch statistics (requires M >= 2)
/// and updates the running statistics in place; infer mode uses the stored
/// running statistics and leaves params untouched.
ForwardResult forward(NetworkParams& params, const Eigen::MatrixXd& batch,
                      Mode mode);

/// Infer-mode forward over immutable parameters (safe to share).
Eigen::MatrixXd forward_infer(const NetworkParams& params,
                              const Eigen::MatrixXd& batch);

struct LayerGrads {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
    Eigen::VectorXd bn_scale;
    Eigen::VectorXd bn_shift;
};

struct NetworkGrads {
    std::vector<LayerGrads> hidden;
    Eigen::MatrixXd out_weight;
    Eigen::VectorXd out_bias;
};

NetworkGrads zero_grads(const NetworkParams& params);

/// Exact reverse-mode gradient of sum_ij grad_weights_ij * output_ij with
/// respect to every trainable tensor. The cache must come from a train-mode
/// forward of the same parameter revision, else std::invalid_argument.
NetworkGrads backward(const NetworkParams& params, const ForwardCache& cache,
                      const Eigen::MatrixXd& grad_weights);

/// Named view of one trainable tensor; params, grads and Adam moments
/// enumerate in the same fixed order.
struct TensorRef {
    std::string name;
    double* data;
    std::size_t size;
};

std::vector<TensorRef> trainable_tensors(NetworkParams& params);
std::vector<TensorRef> trainable_tensors(NetworkGrads& grads);

struct AdamState {
    NetworkGrads first_moment;
    NetworkGrads second_moment;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState init_adam(const NetworkParams& params);

/// Standard bias-corrected Adam update, applied in place. Throws a numeric
/// error naming the offending tensor when a gradient entry is non-finite.
void adam_step(NetworkParams& params, const NetworkGrads& grads,
               AdamState& state, double learning_rate);

/// Round-trippable structured-text snapshot of the parameters together
/// with the wavelet configuration the model was trained for.
struct Checkpoint {
    int version = 1;
    NetworkParams params;
    int wavelet_order = 4;
    int level = 1;
    std::string boundary = "symmetric";
    double norm_min = 0.0;  ///< de-normalization metadata of the training data
    double norm_max = 1.0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ppgdn::network
