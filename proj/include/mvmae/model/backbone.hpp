#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvmae/autodiff/var.hpp"
#include "mvmae/data/study.hpp"
#include "mvmae/model/params.hpp"
#include "mvmae/rng.hpp"
#include "mvmae/tensor.hpp"

namespace mvmae::model {

struct BackboneConfig {
    std::size_t image_side = 32;
    std::size_t patch_side = 8;
    std::size_t embed_dim = 32;
    std::size_t encoder_layers = 2;
    std::size_t encoder_heads = 2;
    std::size_t decoder_dim = 16;
    std::size_t decoder_layers = 1;
    std::size_t decoder_heads = 2;
    double mask_ratio = 0.9;
    double init_std = 0.02;

    // "vit-micro" (desk scale, the default above) or "vit-base-16"
    // (224/16, 768-d, 12 layers, 12 heads, 512-d 8-layer decoder).
    static BackboneConfig preset(std::string_view name);

    std::size_t grid() const { return image_side / patch_side; }
    std::size_t tokens() const { return grid() * grid(); }
    std::size_t patch_dim() const { return patch_side * patch_side; }
    std::size_t masked_count() const;
    std::size_t visible_count() const { return tokens() - masked_count(); }

    // Throws ValidationError on any violated invariant.
    void validate() const;
};

// floor(alpha * T), guarded against representation error in the product.
std::size_t masked_count(std::size_t total, double alpha);

struct MaskSpec {
    double alpha = 0.0;
    std::size_t total = 0;
    std::vector<std::size_t> visible;  // ascending
    std::vector<std::size_t> masked;   // ascending

    static MaskSpec all_visible(std::size_t total);
};

// Uniformly random subset of floor(alpha*T) masked positions.
MaskSpec sample_mask(std::size_t total, double alpha, Rng& rng);

// Row t is the row-major flattening of the t-th patch in raster order.
Tensor patchify(const data::Image& image, std::size_t patch_side);
data::Image unpatchify(const Tensor& patches, std::size_t image_side, std::size_t patch_side);

// Registers encoder ("enc.*") and reconstruction decoder ("dec.*").
void init_backbone(ParameterStore& store, const BackboneConfig& cfg, Rng& rng);

// Encodes the patches listed in `order` (any order; each entry is an original
// token index). Output row 0 is CLS, row 1+i encodes order[i].
ad::Var encode_tokens(Binding& p, const BackboneConfig& cfg, const Tensor& patches,
                      std::span<const std::size_t> order, data::ProjectionFamily family);

// f_theta over the visible tokens of `mask`: (1 + |T_vis|) x D.
ad::Var encode(Binding& p, const BackboneConfig& cfg, const Tensor& patches, const MaskSpec& mask,
               data::ProjectionFamily family);

// g_phi: reconstruction of all T patches (T x patch_side^2).
ad::Var decode(Binding& p, const BackboneConfig& cfg, const ad::Var& encoding,
               const MaskSpec& mask, data::ProjectionFamily family);

}  // namespace mvmae::model
