#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "mvmae/model/params.hpp"

namespace mvmae::train {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.05;
};

// Adaptive moments with bias correction and decoupled weight decay (applied
// only to parameters registered with decay = true).
class AdamW {
public:
    AdamW() = default;
    AdamW(const model::ParameterStore& store, AdamWConfig cfg);

    // Updates parameters whose `active` flag is set; inactive ones are left
    // untouched (no decay, no moment update). Throws NumericalError on a
    // non-finite gradient.
    void step(model::ParameterStore& store, const model::Gradients& grads, double lr,
              const std::vector<bool>& active);
    void step(model::ParameterStore& store, const model::Gradients& grads, double lr);

    const AdamWConfig& config() const { return cfg_; }
    std::size_t steps_taken() const { return t_; }

    model::Gradients& first_moment() { return m_; }
    model::Gradients& second_moment() { return v_; }
    const model::Gradients& first_moment() const { return m_; }
    const model::Gradients& second_moment() const { return v_; }
    void set_steps_taken(std::size_t t) { t_ = t; }

private:
    AdamWConfig cfg_;
    model::Gradients m_;
    model::Gradients v_;
    std::size_t t_ = 0;
};

// Linear warmup over `warmup` steps, then cosine decay from base to min_lr
// at step total.
double lr_at(std::size_t step, std::size_t total, std::size_t warmup, double base, double min_lr);

// Global L2 norm rescaling; returns the norm before clipping. max_norm <= 0
// disables clipping.
double clip_grad_norm(model::Gradients& grads, double max_norm);

}  // namespace mvmae::train
