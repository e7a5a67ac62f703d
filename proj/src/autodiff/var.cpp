#include "mvmae/autodiff/var.hpp"

#include <unordered_set>
#include <utility>

#include "mvmae/errors.hpp"

namespace mvmae::ad {

double* Node::grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad.data();
}

Var Var::constant(Tensor value) { return leaf(std::move(value), false); }

Var Var::leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(value.shape);
    n->value = std::move(value.data);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
}

Var Var::scalar(double value) { return constant(Tensor({1}, {value})); }

double Var::item() const {
    if (node_->value.size() != 1) {
        throw ShapeError("item() on tensor of shape " + shape_str(node_->shape));
    }
    return node_->value[0];
}

Tensor Var::grad_tensor() const {
    if (node_->grad.empty()) return Tensor(node_->shape, 0.0);
    return Tensor(node_->shape, node_->grad);
}

void Var::backward() const {
    if (node_->value.size() != 1) {
        throw ShapeError("backward() needs a single-element root, got " + shape_str(node_->shape));
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
}

Var make_result(Shape shape, std::vector<double> value, std::vector<Var> operands,
                BackwardFn backward) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool needs = false;
    for (const Var& v : operands) needs = needs || v.requires_grad();
    if (needs) {
        n->requires_grad = true;
        n->parents.reserve(operands.size());
        for (const Var& v : operands) n->parents.push_back(v.shared());
        n->backward = std::move(backward);
    }
    return Var(std::move(n));
}

}  // namespace mvmae::ad
