#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvmae/autodiff/var.hpp"
#include "mvmae/rng.hpp"
#include "mvmae/tensor.hpp"

namespace mvmae::model {

struct Parameter {
    std::string name;
    Tensor value;
    bool decay = true;  // weight decay applies (matrices, not biases/norms)
};

// Ordered, name-indexed parameter collection. Order is registration order
// and is what checkpoints and gradient buffers follow.
class ParameterStore {
public:
    Parameter& add(std::string name, Tensor value, bool decay);

    bool contains(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;
    Parameter& get(std::string_view name) { return params_[index_of(name)]; }
    const Parameter& get(std::string_view name) const { return params_[index_of(name)]; }

    std::span<Parameter> params() { return params_; }
    std::span<const Parameter> params() const { return params_; }
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

private:
    std::vector<Parameter> params_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

// Per-parameter gradient storage aligned with a store.
struct Gradients {
    std::vector<std::vector<double>> values;

    static Gradients zeros_like(const ParameterStore& store);
    void add(const Gradients& other, double weight = 1.0);
    void scale(double c);
};

// Graph-local view of a store: hands out one leaf Var per parameter, created
// on first use. Parameters for which `trainable` is false become constants,
// so no gradient is ever computed for them.
class Binding {
public:
    using Predicate = std::function<bool(std::string_view)>;

    Binding(const ParameterStore& store, Predicate trainable);
    // Uses caller-owned Vars (one per parameter, in store order).
    Binding(const ParameterStore& store, std::vector<ad::Var> leaves);
    static Binding trainable_all(const ParameterStore& store);
    static Binding frozen(const ParameterStore& store);

    ad::Var operator()(std::string_view name);

    // Adds this graph's leaf gradients into `grads`.
    void accumulate(Gradients& grads) const;

private:
    const ParameterStore* store_;
    Predicate trainable_;
    std::vector<ad::Var> leaves_;
};

// Initializers.
Tensor truncated_normal(Shape shape, Rng& rng, double stddev);

// prefix.w (in x out, Xavier-uniform, decayed) and prefix.b (zeros).
void add_linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                Rng& rng);
void add_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t dim);

ad::Var linear(Binding& p, const std::string& prefix, const ad::Var& x);
ad::Var layer_norm_affine(Binding& p, const std::string& prefix, const ad::Var& x);

}  // namespace mvmae::model
