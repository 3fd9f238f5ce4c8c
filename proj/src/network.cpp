#include "ppgdn/network.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace ppgdn::network {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;  // new = momentum * old + (1-m) * batch

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw std::runtime_error("checkpoint: malformed matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw std::runtime_error("checkpoint: ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw std::runtime_error("checkpoint: malformed vector");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

void check_batch(const NetworkParams& params, const Eigen::MatrixXd& batch,
                 Mode mode) {
    if (params.widths.size() != 5 || params.hidden.size() != 3)
        throw std::invalid_argument("network: malformed parameter set");
    if (batch.cols() != params.widths[0])
        throw std::invalid_argument(
            "network: batch width " + std::to_string(batch.cols()) +
            " does not match input width " + std::to_string(params.widths[0]));
    if (batch.rows() < 1)
        throw std::invalid_argument("network: empty batch");
    if (mode == Mode::train && batch.rows() < 2)
        throw std::invalid_argument(
            "network: train mode needs at least 2 rows for batch statistics");
}

}  // namespace

NetworkParams init_network(int n, int output_width, std::uint64_t seed) {
    if (n < 8)
        throw std::invalid_argument(
            "init_network: input width must be at least 8 so all hidden "
            "widths stay positive, got " + std::to_string(n));
    if (output_width < 1)
        throw std::invalid_argument("init_network: output width must be >= 1");

    NetworkParams p;
    p.widths = {n, n / 2, n / 4, n / 8, output_width};
    std::mt19937_64 rng(seed);

    auto xavier = [&rng](Eigen::Index fan_in, Eigen::Index fan_out) {
        const double limit =
            std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Eigen::MatrixXd w(fan_in, fan_out);
        for (Eigen::Index r = 0; r < fan_in; ++r)
            for (Eigen::Index c = 0; c < fan_out; ++c) w(r, c) = dist(rng);
        return w;
    };

    for (int h = 0; h < 3; ++h) {
        HiddenLayer layer;
        const int in = p.widths[static_cast<std::size_t>(h)];
        const int out = p.widths[static_cast<std::size_t>(h) + 1];
        layer.weight = xavier(in, out);
        layer.bias = Eigen::VectorXd::Zero(out);
        layer.bn_scale = Eigen::VectorXd::Ones(out);
        layer.bn_shift = Eigen::VectorXd::Zero(out);
        layer.running_mean = Eigen::VectorXd::Zero(out);
        layer.running_var = Eigen::VectorXd::Ones(out);
        p.hidden.push_back(std::move(layer));
    }
    p.out_weight = xavier(p.widths[3], p.widths[4]);
    p.out_bias = Eigen::VectorXd::Zero(p.widths[4]);
    return p;
}

ForwardResult forward(NetworkParams& params, const Eigen::MatrixXd& batch,
                      Mode mode) {
    check_batch(params, batch, mode);
    const auto m_rows = batch.rows();
    const double m = static_cast<double>(m_rows);

    ForwardResult result;
    result.cache.input = batch;
    result.cache.train_mode = (mode == Mode::train);

    Eigen::MatrixXd current = batch;
    for (auto& layer : params.hidden) {
        LayerCache lc;
        lc.affine = (current * layer.weight).rowwise() + layer.bias.transpose();
        const auto cols = lc.affine.cols();
        lc.normalized.resize(m_rows, cols);

        if (mode == Mode::train) {
            lc.batch_mean.resize(cols);
            lc.batch_var.resize(cols);
            lc.inv_std.resize(cols);
            for (Eigen::Index j = 0; j < cols; ++j) {
                const double mean = lc.affine.col(j).mean();
                const double var =
                    (lc.affine.col(j).array() - mean).square().sum() / m;
                lc.batch_mean(j) = mean;
                lc.batch_var(j) = var;
                lc.inv_std(j) = 1.0 / std::sqrt(var + kBnEps);
                lc.normalized.col(j) =
                    (lc.affine.col(j).array() - mean) * lc.inv_std(j);
            }
            layer.running_mean = kBnMomentum * layer.running_mean +
                                 (1.0 - kBnMomentum) * lc.batch_mean;
            layer.running_var = kBnMomentum * layer.running_var +
                                (1.0 - kBnMomentum) * lc.batch_var;
        } else {
            for (Eigen::Index j = 0; j < cols; ++j) {
                const double inv =
                    1.0 / std::sqrt(layer.running_var(j) + kBnEps);
                lc.normalized.col(j) =
                    (lc.affine.col(j).array() - layer.running_mean(j)) * inv;
            }
        }

        Eigen::MatrixXd bn_out =
            (lc.normalized.array().rowwise() *
             layer.bn_scale.transpose().array())
                .rowwise() +
            layer.bn_shift.transpose().array();
        lc.activated = bn_out.cwiseMax(0.0);
        current = lc.activated;
        result.cache.layers.push_back(std::move(lc));
    }

    result.cache.logits =
        (current * params.out_weight).rowwise() + params.out_bias.transpose();
    result.cache.output =
        1.0 / (1.0 + (-result.cache.logits.array()).exp());
    result.cache.params_revision = params.revision;
    result.weights = result.cache.output;
    return result;
}

Eigen::MatrixXd forward_infer(const NetworkParams& params,
                              const Eigen::MatrixXd& batch) {
    // Infer mode never mutates; reuse the shared path on a const view.
    auto& mutable_params = const_cast<NetworkParams&>(params);
    return forward(mutable_params, batch, Mode::infer).weights;
}

NetworkGrads zero_grads(const NetworkParams& params) {
    NetworkGrads g;
    for (const auto& layer : params.hidden) {
        LayerGrads lg;
        lg.weight = Eigen::MatrixXd::Zero(layer.weight.rows(),
                                          layer.weight.cols());
        lg.bias = Eigen::VectorXd::Zero(layer.bias.size());
        lg.bn_scale = Eigen::VectorXd::Zero(layer.bn_scale.size());
        lg.bn_shift = Eigen::VectorXd::Zero(layer.bn_shift.size());
        g.hidden.push_back(std::move(lg));
    }
    g.out_weight = Eigen::MatrixXd::Zero(params.out_weight.rows(),
                                         params.out_weight.cols());
    g.out_bias = Eigen::VectorXd::Zero(params.out_bias.size());
    return g;
}

NetworkGrads backward(const NetworkParams& params, const ForwardCache& cache,
                      const Eigen::MatrixXd& grad_weights) {
    if (!cache.train_mode)
        throw std::invalid_argument(
            "backward: cache must come from a train-mode forward");
    if (cache.params_revision != params.revision)
        throw std::invalid_argument(
            "backward: cache is stale (parameters changed since forward)");
    if (grad_weights.rows() != cache.output.rows() ||
        grad_weights.cols() != cache.output.cols())
        throw std::invalid_argument(
            "backward: upstream gradient shape does not match the output");
    if (cache.layers.size() != params.hidden.size())
        throw std::invalid_argument("backward: malformed cache");

    NetworkGrads g = zero_grads(params);
    const double m = static_cast<double>(cache.input.rows());

    // sigmoid output layer
    Eigen::MatrixXd dlogits =
        grad_weights.array() * cache.output.array() *
        (1.0 - cache.output.array());
    g.out_weight = cache.layers.back().activated.transpose() * dlogits;
    g.out_bias = dlogits.colwise().sum().transpose();
    Eigen::MatrixXd dcurrent = dlogits * params.out_weight.transpose();

    for (int h = 2; h >= 0; --h) {
        const auto& layer = params.hidden[static_cast<std::size_t>(h)];
        const auto& lc = cache.layers[static_cast<std::size_t>(h)];
        auto& lg = g.hidden[static_cast<std::size_t>(h)];

        // ReLU mask: active exactly where the activation is positive
        Eigen::MatrixXd dbn =
            (lc.activated.array() > 0.0).select(dcurrent, 0.0);

        lg.bn_scale =
            (dbn.array() * lc.normalized.array()).colwise().sum().transpose();
        lg.bn_shift = dbn.colwise().sum().transpose();

        Eigen::MatrixXd dnorm = dbn.array().rowwise() *
                                layer.bn_scale.transpose().array();

        // batch-statistics normalization backward, per feature
        Eigen::MatrixXd daffine(dnorm.rows(), dnorm.cols());
        for (Eigen::Index j = 0; j < dnorm.cols(); ++j) {
            const double sum_dn = dnorm.col(j).sum();
            const double sum_dn_xn =
                (dnorm.col(j).array() * lc.normalized.col(j).array()).sum();
            daffine.col(j) =
                (lc.inv_std(j) / m) *
                (m * dnorm.col(j).array() - sum_dn -
                 lc.normalized.col(j).array() * sum_dn_xn);
        }

        const Eigen::MatrixXd& layer_input =
            h == 0 ? cache.input
                   : cache.layers[static_cast<std::size_t>(h) - 1].activated;
        lg.weight = layer_input.transpose() * daffine;
        lg.bias = daffine.colwise().sum().transpose();
        if (h > 0) dcurrent = daffine * layer.weight.transpose();
    }
    return g;
}

namespace {

template <typename Params, typename Push>
void enumerate_hidden(Params& p, Push&& push) {
    for (std::size_t h = 0; h < p.hidden.size(); ++h) {
        const std::string prefix = "hidden" + std::to_string(h + 1);
        push(prefix + ".weight", p.hidden[h].weight);
        push(prefix + ".bias", p.hidden[h].bias);
        push(prefix + ".bn_scale", p.hidden[h].bn_scale);
        push(prefix + ".bn_shift", p.hidden[h].bn_shift);
    }
}

}  // namespace

std::vector<TensorRef> trainable_tensors(NetworkParams& params) {
    std::vector<TensorRef> out;
    auto push = [&out](const std::string& name, auto& tensor) {
        out.push_back({name, tensor.data(),
                       static_cast<std::size_t>(tensor.size())});
    };
    enumerate_hidden(params, push);
    push("output.weight", params.out_weight);
    push("output.bias", params.out_bias);
    return out;
}

std::vector<TensorRef> trainable_tensors(NetworkGrads& grads) {
    std::vector<TensorRef> out;
    auto push = [&out](const std::string& name, auto& tensor) {
        out.push_back({name, tensor.data(),
                       static_cast<std::size_t>(tensor.size())});
    };
    enumerate_hidden(grads, push);
    push("output.weight", grads.out_weight);
    push("output.bias", grads.out_bias);
    return out;
}

AdamState init_adam(const NetworkParams& params) {
    AdamState s;
    s.first_moment = zero_grads(params);
    s.second_moment = zero_grads(params);
    return s;
}

void adam_step(NetworkParams& params, const NetworkGrads& grads,
               AdamState& state, double learning_rate) {
    auto theta = trainable_tensors(params);
    auto g = trainable_tensors(const_cast<NetworkGrads&>(grads));
    auto m1 = trainable_tensors(state.first_moment);
    auto m2 = trainable_tensors(state.second_moment);
    if (theta.size() != g.size())
        throw std::invalid_argument("adam_step: gradient structure mismatch");

    for (std::size_t t = 0; t < g.size(); ++t) {
        if (g[t].size != theta[t].size)
            throw std::invalid_argument("adam_step: shape mismatch in " +
                                        g[t].name);
        for (std::size_t i = 0; i < g[t].size; ++i)
            if (!std::isfinite(g[t].data[i]))
                throw std::runtime_error(
                    "adam_step: non-finite gradient in " + g[t].name);
    }

    state.step += 1;
    const double bc1 =
        1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 =
        1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t t = 0; t < g.size(); ++t) {
        for (std::size_t i = 0; i < g[t].size; ++i) {
            const double grad = g[t].data[i];
            double& m = m1[t].data[i];
            double& v = m2[t].data[i];
            m = state.beta1 * m + (1.0 - state.beta1) * grad;
            v = state.beta2 * v + (1.0 - state.beta2) * grad * grad;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            theta[t].data[i] -=
                learning_rate * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
    params.revision += 1;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json j;
    j["version"] = ckpt.version;
    j["wavelet_order"] = ckpt.wavelet_order;
    j["level"] = ckpt.level;
    j["boundary"] = ckpt.boundary;
    j["norm_min"] = ckpt.norm_min;
    j["norm_max"] = ckpt.norm_max;
    j["widths"] = ckpt.params.widths;
    json hidden = json::array();
    for (const auto& layer : ckpt.params.hidden) {
        json h;
        h["weight"] = matrix_to_json(layer.weight);
        h["bias"] = vector_to_json(layer.bias);
        h["bn_scale"] = vector_to_json(layer.bn_scale);
        h["bn_shift"] = vector_to_json(layer.bn_shift);
        h["running_mean"] = vector_to_json(layer.running_mean);
        h["running_var"] = vector_to_json(layer.running_var);
        hidden.push_back(std::move(h));
    }
    j["hidden"] = std::move(hidden);
    j["out_weight"] = matrix_to_json(ckpt.params.out_weight);
    j["out_bias"] = vector_to_json(ckpt.params.out_bias);

    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump();
    if (!out)
        throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed checkpoint " + path + ": " +
                                 e.what());
    }
    try {
        Checkpoint ckpt;
        ckpt.version = j.at("version").get<int>();
        if (ckpt.version != 1)
            throw std::runtime_error("unsupported checkpoint version " +
                                     std::to_string(ckpt.version));
        ckpt.wavelet_order = j.at("wavelet_order").get<int>();
        ckpt.level = j.at("level").get<int>();
        ckpt.boundary = j.at("boundary").get<std::string>();
        ckpt.norm_min = j.at("norm_min").get<double>();
        ckpt.norm_max = j.at("norm_max").get<double>();
        ckpt.params.widths = j.at("widths").get<std::vector<int>>();
        for (const auto& h : j.at("hidden")) {
            HiddenLayer layer;
            layer.weight = matrix_from_json(h.at("weight"));
            layer.bias = vector_from_json(h.at("bias"));
            layer.bn_scale = vector_from_json(h.at("bn_scale"));
            layer.bn_shift = vector_from_json(h.at("bn_shift"));
            layer.running_mean = vector_from_json(h.at("running_mean"));
            layer.running_var = vector_from_json(h.at("running_var"));
            ckpt.params.hidden.push_back(std::move(layer));
        }
        ckpt.params.out_weight = matrix_from_json(j.at("out_weight"));
        ckpt.params.out_bias = vector_from_json(j.at("out_bias"));
        return ckpt;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed checkpoint " + path + ": " +
                                 e.what());
    }
}

}  // namespace ppgdn::network
