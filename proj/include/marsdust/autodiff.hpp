#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "marsdust/tensor.hpp"

namespace marsdust::nn {

/// Graph node. Leaves with requires_grad are trainable parameters; interior
/// nodes carry a backward closure that scatters their grad into the inputs.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    /// Allocates a zero gradient on first use.
    Tensor& grad_buffer();
};

/// Shared handle to a graph node. Copies alias the same node.
class Var {
public:
    Var() = default;
    explicit Var(Tensor value, bool requires_grad = false);

    const Tensor& value() const noexcept { return node_->value; }
    Tensor& mutable_value() noexcept { return node_->value; }
    const Tensor& grad() const noexcept { return node_->grad; }
    const Shape& shape() const noexcept { return node_->value.shape(); }
    bool requires_grad() const noexcept { return node_->requires_grad; }
    void zero_grad();

    const std::shared_ptr<Node>& node() const noexcept { return node_; }
    static Var from_node(std::shared_ptr<Node> node);

private:
    std::shared_ptr<Node> node_;
};

/// Reverse sweep from a scalar root. Interior gradients are reset first, so
/// the same graph can be swept again after the parameters' grads are zeroed;
/// leaf gradients accumulate. Throws ValidationError for a non-scalar root.
void backward(const Var& root);

namespace ops {

struct Conv2dOptions {
    int stride = 1;
    int padding = 0;
    int groups = 1;
};

/// weight: (out, in / groups, k, k); bias: (1, out, 1, 1) or an empty Var.
Var conv2d(const Var& x, const Var& weight, const Var& bias, Conv2dOptions opt = {});
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
/// Multiplies x by a (N, C, 1, 1) gate per channel.
Var scale_channels(const Var& x, const Var& gate);
/// Multiplies x by a (N, 1, H, W) gate per pixel.
Var scale_pixels(const Var& x, const Var& gate);
Var concat_channels(std::span<const Var> parts);
Var upsample_nearest2x(const Var& x);
/// (N, C, H, W) -> (N, C, 1, 1).
Var global_avg_pool(const Var& x);
/// Clamp into [lo, hi]; gradient passes where the input lies inside the closed interval.
Var clamp(const Var& x, double lo, double hi);
/// Mean over all elements -> (1, 1, 1, 1).
Var mean(const Var& x);
/// Mean absolute difference to a constant target -> (1, 1, 1, 1).
Var l1_loss(const Var& pred, const Tensor& target);
/// Sum of x * weights for a constant weight tensor -> (1, 1, 1, 1).
Var dot(const Var& x, const Tensor& weights);

}  // namespace ops
}  // namespace marsdust::nn
