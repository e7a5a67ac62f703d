#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "mvmae/autodiff/var.hpp"
#include "mvmae/model/backbone.hpp"
#include "mvmae/tensor.hpp"

namespace mvmae::objectives {

struct RecOptions {
    bool per_token_mean = false;     // average pixels within a patch instead of summing
    bool normalized_target = false;  // standardize each target patch
};

// (1/alpha)(1/|V|) sum_v sum_{t masked} ||x_vt - xhat_vt||^2.
ad::Var loss_rec(std::span<const Tensor> originals, std::span<const ad::Var> reconstructions,
                 const model::MaskSpec& mask, const RecOptions& opt = {});

// (1/(1-alpha))(1/|P|) sum_{u != v} sum_t mse_D(z_ut, z_vt), P ordered pairs.
// Row 0 (CLS) takes part only with include_cls. Zero for a single view.
ad::Var loss_align(std::span<const ad::Var> encodings, const model::MaskSpec& mask,
                   bool include_cls = true);

// Independent-mask variant: each pair is compared on the intersection of its
// visible sets. Encodings follow their own masks.
ad::Var loss_align_intersection(std::span<const ad::Var> encodings,
                                std::span<const model::MaskSpec> masks, bool include_cls = true);

struct LossWeights {
    double beta_target = 1.0;
    std::size_t anneal_steps = 0;
};

double beta_at(const LossWeights& w, std::size_t step);

struct LossBundle {
    double l_rec = 0.0;
    double l_align = 0.0;
    std::optional<double> l_ce;
    double beta_used = 0.0;
    double total = 0.0;
};

// Throws NumericalError naming the first non-finite term.
LossBundle loss_total(double l_rec, double l_align, double beta, std::optional<double> l_ce = {});

// {"step":..,"l_rec":..,"l_align":..,"l_ce":..,"beta":..,"total":..}
std::string loss_json_line(std::size_t step, const LossBundle& b);

}  // namespace mvmae::objectives
