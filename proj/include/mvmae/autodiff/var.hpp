#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mvmae/tensor.hpp"

namespace mvmae::ad {

// One vertex of the reverse-mode graph. Non-leaf nodes keep their parents
// alive and carry a closure that pushes this node's gradient into them.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until the first contribution arrives
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    double* grad_buffer();
};

// Handle to a graph node. Cheap to copy; copies alias the same node.
//
// Graphs are single-use: call backward() once per forward pass. Nodes that do
// not (transitively) depend on a requires_grad leaf record no parents and no
// closure, which is how inference and frozen encoders avoid graph cost.
class Var {
public:
    Var() = default;

    static Var constant(Tensor value);
    static Var leaf(Tensor value, bool requires_grad = true);
    static Var scalar(double value);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    bool requires_grad() const { return node_->requires_grad; }

    std::span<const double> value() const { return node_->value; }
    double item() const;
    Tensor tensor() const { return Tensor(node_->shape, node_->value); }

    // Empty span when no gradient has reached this node.
    std::span<const double> grad() const { return node_->grad; }
    Tensor grad_tensor() const;

    // Seeds d(self)/d(self) = 1 on a single-element node and propagates.
    void backward() const;

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& shared() const { return node_; }

    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<Node> node_;
};

using BackwardFn = std::function<void(Node&)>;

// Builds a result node; parents and closure are dropped when no operand
// requires a gradient.
Var make_result(Shape shape, std::vector<double> value, std::vector<Var> operands,
                BackwardFn backward);

}  // namespace mvmae::ad
