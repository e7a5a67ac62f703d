#include "mvmae/train/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "mvmae/errors.hpp"

namespace mvmae::train {

AdamW::AdamW(const model::ParameterStore& store, AdamWConfig cfg)
    : cfg_(cfg), m_(model::Gradients::zeros_like(store)), v_(model::Gradients::zeros_like(store)) {}

void AdamW::step(model::ParameterStore& store, const model::Gradients& grads, double lr) {
    step(store, grads, lr, std::vector<bool>(store.size(), true));
}

void AdamW::step(model::ParameterStore& store, const model::Gradients& grads, double lr,
                 const std::vector<bool>& active) {
    auto params = store.params();
    if (grads.values.size() != params.size() || m_.values.size() != params.size() ||
        active.size() != params.size()) {
        throw ShapeError("optimizer: gradient/parameter count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!active[i]) continue;
        if (grads.values[i].size() != params[i].value.size()) {
            throw ShapeError("optimizer: gradient for " + params[i].name + " has wrong size");
        }
        for (double g : grads.values[i]) {
            if (!std::isfinite(g)) throw NumericalError("non-finite gradient for " + params[i].name);
        }
    }
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!active[i]) continue;
        auto& p = params[i].value.data;
        auto& m = m_.values[i];
        auto& v = v_.values[i];
        const auto& g = grads.values[i];
        const double shrink = params[i].decay ? 1.0 - lr * cfg_.weight_decay : 1.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] = p[j] * shrink - lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

double lr_at(std::size_t step, std::size_t total, std::size_t warmup, double base, double min_lr) {
    if (step < warmup) return base * static_cast<double>(step + 1) / static_cast<double>(warmup);
    if (total <= warmup) return base;
    const double progress =
        std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(total - warmup));
    return min_lr + 0.5 * (base - min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_grad_norm(model::Gradients& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& v : grads.values) {
        for (double g : v) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
    return norm;
}

}  // namespace mvmae::train
