#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nnreach/activation_pattern.hpp"
#include "nnreach/errors.hpp"

namespace nnreach {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Layer {
    MatrixXd weights;  // rows = outputs, cols = inputs
    VectorXd bias;
};

/// Feedforward network: ReLU on every hidden layer, identity on the last.
/// Immutable once constructed.
class ReluNetwork {
public:
    ReluNetwork() = default;

    explicit ReluNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw StructureError("network has no layers");
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& l = layers_[i];
            if (l.weights.rows() == 0 || l.weights.cols() == 0)
                throw StructureError("layer " + std::to_string(i + 1) + " has an empty weight matrix");
            if (l.bias.size() != l.weights.rows())
                throw StructureError("layer " + std::to_string(i + 1) + ": bias has " +
                                     std::to_string(l.bias.size()) + " entries, weights have " +
                                     std::to_string(l.weights.rows()) + " rows");
            if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows())
                throw StructureError("layer " + std::to_string(i + 1) + " expects " +
                                     std::to_string(l.weights.cols()) + " inputs but layer " +
                                     std::to_string(i) + " produces " +
                                     std::to_string(layers_[i - 1].weights.rows()));
            if (!l.weights.allFinite() || !l.bias.allFinite())
                throw StructureError("layer " + std::to_string(i + 1) + " has non-finite parameters");
        }
        hidden_ = 0;
        for (std::size_t i = 0; i + 1 < layers_.size(); ++i) hidden_ += static_cast<std::size_t>(layers_[i].weights.rows());
    }

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    std::size_t hidden_layer_count() const noexcept { return layers_.empty() ? 0 : layers_.size() - 1; }
    int input_dim() const { return static_cast<int>(layers_.front().weights.cols()); }
    int output_dim() const { return static_cast<int>(layers_.back().weights.rows()); }
    std::size_t hidden_count() const noexcept { return hidden_; }

    /// Width of hidden layer `layer` (1-based).
    int width(int layer) const { return static_cast<int>(layers_.at(static_cast<std::size_t>(layer - 1)).weights.rows()); }

    /// Offset of hidden layer `layer` (1-based) in a layer-major pattern.
    std::size_t offset(int layer) const {
        std::size_t off = 0;
        for (int l = 1; l < layer; ++l) off += static_cast<std::size_t>(width(l));
        return off;
    }

    std::size_t flat_index(NeuronId n) const { return offset(n.layer) + static_cast<std::size_t>(n.index); }

    NeuronId neuron_at(std::size_t flat) const {
        for (int l = 1; l <= static_cast<int>(hidden_layer_count()); ++l) {
            auto w = static_cast<std::size_t>(width(l));
            if (flat < w) return {l, static_cast<int>(flat)};
            flat -= w;
        }
        throw DimensionError("neuron index out of range");
    }

    VectorXd evaluate(const VectorXd& x) const {
        check_input(x);
        VectorXd z = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            VectorXd pre = layers_[i].weights * z + layers_[i].bias;
            z = (i + 1 < layers_.size()) ? VectorXd(pre.cwiseMax(0.0)) : pre;
        }
        return z;
    }

    /// Hidden preactivations, layer-major, concatenated into one vector.
    VectorXd preactivations(const VectorXd& x) const {
        check_input(x);
        VectorXd out(static_cast<Eigen::Index>(hidden_));
        Eigen::Index pos = 0;
        VectorXd z = x;
        for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
            VectorXd pre = layers_[i].weights * z + layers_[i].bias;
            out.segment(pos, pre.size()) = pre;
            pos += pre.size();
            z = pre.cwiseMax(0.0);
        }
        return out;
    }

    /// Bit j of layer i is 1 iff its preactivation is strictly positive.
    /// No tolerance: a preactivation of exactly 0 gives bit 0.
    ActivationPattern activation_pattern(const VectorXd& x) const {
        VectorXd pre = preactivations(x);
        ActivationPattern ap(hidden_);
        for (Eigen::Index k = 0; k < pre.size(); ++k) ap.set(static_cast<std::size_t>(k), pre[k] > 0.0);
        return ap;
    }

private:
    void check_input(const VectorXd& x) const {
        if (x.size() != input_dim())
            throw DimensionError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                                 std::to_string(input_dim()));
    }

    std::vector<Layer> layers_;
    std::size_t hidden_ = 0;
};

/// Bias-free equivalent of a ReluNetwork acting on [x; 1]. Hidden layers carry
/// an extra trailing row [0 ... 0 1] that propagates the constant.
class AugmentedNetwork {
public:
    explicit AugmentedNetwork(ReluNetwork net) : source_(std::move(net)) {
        const auto& layers = source_.layers();
        weights_.reserve(layers.size());
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            const Eigen::Index rows = l.weights.rows(), cols = l.weights.cols();
            const bool hidden = i + 1 < layers.size();
            MatrixXd w = MatrixXd::Zero(hidden ? rows + 1 : rows, cols + 1);
            w.topLeftCorner(rows, cols) = l.weights;
            w.topRightCorner(rows, 1) = l.bias;
            if (hidden) w(rows, cols) = 1.0;
            weights_.push_back(std::move(w));
        }
    }

    const ReluNetwork& source() const noexcept { return source_; }
    const std::vector<MatrixXd>& weights() const noexcept { return weights_; }
    std::size_t hidden_count() const noexcept { return source_.hidden_count(); }
    int input_dim() const { return source_.input_dim(); }
    int output_dim() const { return source_.output_dim(); }

    /// Forward pass on an augmented input [x; 1].
    VectorXd evaluate(const VectorXd& x_aug) const {
        if (x_aug.size() != input_dim() + 1)
            throw DimensionError("augmented input must have dimension " + std::to_string(input_dim() + 1));
        VectorXd z = x_aug;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            VectorXd pre = weights_[i] * z;
            z = (i + 1 < weights_.size()) ? VectorXd(pre.cwiseMax(0.0)) : pre;
        }
        return z;
    }

private:
    ReluNetwork source_;
    std::vector<MatrixXd> weights_;
};

inline AugmentedNetwork augment(const ReluNetwork& net) { return AugmentedNetwork(net); }

/// T copies of a state-to-state network chained end to end. Each output layer is
/// folded into the next copy's first layer (no ReLU sits between them), so the
/// result has T * hidden_count() hidden neurons.
inline ReluNetwork compose(const ReluNetwork& net, int steps) {
    if (steps < 1) throw ContractError("compose requires at least one step");
    if (steps == 1) return net;
    if (net.input_dim() != net.output_dim())
        throw StructureError("compose requires equal input and output dimension, got " +
                             std::to_string(net.input_dim()) + " and " + std::to_string(net.output_dim()));

    const auto& src = net.layers();
    if (src.size() == 1) {
        // purely affine network: nothing to chain through
        Layer acc = src.front();
        for (int t = 1; t < steps; ++t) acc = {src.front().weights * acc.weights, src.front().weights * acc.bias + src.front().bias};
        return ReluNetwork({acc});
    }
    std::vector<Layer> out;
    out.reserve(static_cast<std::size_t>(steps) * (src.size() - 1) + 1);
    for (int t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i + 1 < src.size(); ++i) {
            if (t > 0 && i == 0) {
                const Layer& prev_out = src.back();
                out.push_back({src.front().weights * prev_out.weights,
                               src.front().weights * prev_out.bias + src.front().bias});
            } else {
                out.push_back(src[i]);
            }
        }
    }
    out.push_back(src.back());
    return ReluNetwork(std::move(out));
}

}  // namespace nnreach
