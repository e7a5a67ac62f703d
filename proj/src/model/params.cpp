#include "mvmae/model/params.hpp"

#include <cmath>

#include "mvmae/autodiff/ops.hpp"
#include "mvmae/errors.hpp"

namespace mvmae::model {

Parameter& ParameterStore::add(std::string name, Tensor value, bool decay) {
    if (index_.count(name)) throw ValidationError("duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    params_.push_back(Parameter{std::move(name), std::move(value), decay});
    return params_.back();
}

bool ParameterStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterStore::index_of(std::string_view name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter '" + std::string(name) + "'");
    return it->second;
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

Gradients Gradients::zeros_like(const ParameterStore& store) {
    Gradients g;
    for (const auto& p : store.params()) g.values.emplace_back(p.value.size(), 0.0);
    return g;
}

void Gradients::add(const Gradients& other, double weight) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = 0; j < values[i].size(); ++j) values[i][j] += weight * other.values[i][j];
    }
}

void Gradients::scale(double c) {
    for (auto& v : values) {
        for (double& x : v) x *= c;
    }
}

Binding::Binding(const ParameterStore& store, Predicate trainable)
    : store_(&store), trainable_(std::move(trainable)), leaves_(store.size()) {}

Binding::Binding(const ParameterStore& store, std::vector<ad::Var> leaves)
    : store_(&store), trainable_([](std::string_view) { return true; }), leaves_(std::move(leaves)) {
    if (leaves_.size() != store.size()) {
        throw ShapeError("binding: " + std::to_string(leaves_.size()) + " vars for " +
                         std::to_string(store.size()) + " parameters");
    }
}

Binding Binding::trainable_all(const ParameterStore& store) {
    return Binding(store, [](std::string_view) { return true; });
}

Binding Binding::frozen(const ParameterStore& store) {
    return Binding(store, [](std::string_view) { return false; });
}

ad::Var Binding::operator()(std::string_view name) {
    const std::size_t i = store_->index_of(name);
    if (!leaves_[i].defined()) {
        const Parameter& p = store_->params()[i];
        leaves_[i] = ad::Var::leaf(p.value, trainable_(p.name));
    }
    return leaves_[i];
}

void Binding::accumulate(Gradients& grads) const {
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
        if (!leaves_[i].defined() || !leaves_[i].requires_grad()) continue;
        const auto g = leaves_[i].grad();
        if (g.empty()) continue;
        auto& dst = grads.values[i];
        for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
    }
}

Tensor truncated_normal(Shape shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.truncated_normal(stddev);
    return t;
}

void add_linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Tensor w({in, out});
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    store.add(prefix + ".w", std::move(w), true);
    store.add(prefix + ".b", Tensor({out}, 0.0), false);
}

void add_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t dim) {
    store.add(prefix + ".g", Tensor({dim}, 1.0), false);
    store.add(prefix + ".b", Tensor({dim}, 0.0), false);
}

ad::Var linear(Binding& p, const std::string& prefix, const ad::Var& x) {
    return ad::add(ad::matmul(x, p(prefix + ".w")), p(prefix + ".b"));
}

ad::Var layer_norm_affine(Binding& p, const std::string& prefix, const ad::Var& x) {
    return ad::add(ad::mul(ad::layer_norm(x), p(prefix + ".g")), p(prefix + ".b"));
}

}  // namespace mvmae::model
