#pragma once

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "oct/params.hpp"
#include "oct/tensor.hpp"

namespace oct {

// Records one forward pass so it can be differentiated in reverse. A graph
// is cheap, single-use, and owned by one thread; networks stay const during
// forward and only write parameter gradients from backward().
template <class T>
class Graph {
public:
    using NodeId = int;

    NodeId input(Tensor<T> value, bool requires_grad = false);

    // k x k convolution with zero padding. Gradients for weight and bias are
    // accumulated into weight_grad / bias_grad when both are given; frozen
    // layers pass null.
    NodeId conv2d(NodeId x, const Param<T>& weight, const Param<T>& bias, int stride, int pad,
                  Param<T>* weight_grad = nullptr, Param<T>* bias_grad = nullptr);
    NodeId relu(NodeId x);
    NodeId sigmoid(NodeId x);
    NodeId maxpool2(NodeId x);
    NodeId upsample2(NodeId x);
    NodeId concat(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId x, T factor);
    NodeId multiply(NodeId x, const Tensor<T>& factor);
    // Per-sample (x - min) / (max - min); constant input maps to zeros.
    NodeId min_max_scale(NodeId x);
    // 1-channel -> 3-channel replication with per-channel (x - mean) / std.
    NodeId gray_to_rgb(NodeId x, const std::array<T, 3>& mean, const std::array<T, 3>& stddev);

    const Tensor<T>& value(NodeId id) const { return nodes_[id].value; }
    const Tensor<T>& grad(NodeId id) const { return nodes_[id].grad; }
    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
    std::size_t node_count() const { return nodes_.size(); }

    // Seeds d(loss)/d(node) for each pair and propagates to every node that
    // requires a gradient. Call at most once per graph.
    void backward(std::span<const std::pair<NodeId, Tensor<T>>> seeds);
    void backward(NodeId id, Tensor<T> seed);

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool requires_grad = false;
        std::function<void(Graph&)> backward;
    };

    NodeId push(Tensor<T> value, bool requires_grad, std::function<void(Graph&)> fn);
    Tensor<T>& grad_of(NodeId id);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace oct
