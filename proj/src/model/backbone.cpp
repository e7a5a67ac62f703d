#include "mvmae/model/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvmae/autodiff/ops.hpp"
#include "mvmae/errors.hpp"
#include "mvmae/model/transformer.hpp"

namespace mvmae::model {

using ad::Var;

BackboneConfig BackboneConfig::preset(std::string_view name) {
    if (name == "vit-micro") return BackboneConfig{};
    if (name == "vit-base-16") {
        BackboneConfig c;
        c.image_side = 224;
        c.patch_side = 16;
        c.embed_dim = 768;
        c.encoder_layers = 12;
        c.encoder_heads = 12;
        c.decoder_dim = 512;
        c.decoder_layers = 8;
        c.decoder_heads = 16;
        return c;
    }
    throw ValidationError("unknown backbone preset '" + std::string(name) + "'");
}

std::size_t masked_count(std::size_t total, double alpha) {
    return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(total) + 1e-9));
}

std::size_t BackboneConfig::masked_count() const { return model::masked_count(tokens(), mask_ratio); }

void BackboneConfig::validate() const {
    if (patch_side == 0 || image_side == 0 || image_side % patch_side != 0) {
        throw ValidationError("image_side must be a positive multiple of patch_side");
    }
    if (embed_dim == 0 || encoder_heads == 0 || embed_dim % encoder_heads != 0) {
        throw ValidationError("embed_dim must be divisible by encoder_heads");
    }
    if (decoder_dim == 0 || decoder_heads == 0 || decoder_dim % decoder_heads != 0) {
        throw ValidationError("decoder_dim must be divisible by decoder_heads");
    }
    if (embed_dim % 4 != 0 || decoder_dim % 4 != 0) {
        throw ValidationError("embed_dim and decoder_dim must be divisible by 4");
    }
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw ValidationError("mask_ratio must lie in (0, 1)");
    const std::size_t m = masked_count();
    if (m < 1 || tokens() - m < 1) {
        throw ValidationError("mask_ratio must mask at least one and keep at least one token");
    }
    if (!(init_std > 0.0)) throw ValidationError("init_std must be positive");
}

MaskSpec MaskSpec::all_visible(std::size_t total) {
    MaskSpec m;
    m.total = total;
    m.visible.resize(total);
    std::iota(m.visible.begin(), m.visible.end(), std::size_t{0});
    return m;
}

MaskSpec sample_mask(std::size_t total, double alpha, Rng& rng) {
    const std::size_t n_masked = masked_count(total, alpha);
    if (total == 0 || n_masked < 1 || n_masked >= total) {
        throw ValidationError("sample_mask: alpha=" + std::to_string(alpha) + " with T=" +
                              std::to_string(total) + " leaves no masked or no visible token");
    }
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first |visible| slots form a uniform subset.
    const std::size_t n_visible = total - n_masked;
    for (std::size_t i = 0; i < n_visible; ++i) std::swap(idx[i], idx[i + rng.below(total - i)]);
    MaskSpec m;
    m.alpha = alpha;
    m.total = total;
    m.visible.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_visible));
    m.masked.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_visible), idx.end());
    std::sort(m.visible.begin(), m.visible.end());
    std::sort(m.masked.begin(), m.masked.end());
    return m;
}

Tensor patchify(const data::Image& image, std::size_t patch_side) {
    if (patch_side == 0 || image.height != image.width || image.height % patch_side != 0) {
        throw ShapeError("patchify: image " + std::to_string(image.height) + "x" +
                         std::to_string(image.width) + " not tileable by patch " +
                         std::to_string(patch_side));
    }
    const std::size_t g = image.height / patch_side;
    Tensor out({g * g, patch_side * patch_side});
    for (std::size_t pr = 0; pr < g; ++pr) {
        for (std::size_t pc = 0; pc < g; ++pc) {
            double* dst = out.data.data() + (pr * g + pc) * patch_side * patch_side;
            for (std::size_t r = 0; r < patch_side; ++r) {
                for (std::size_t c = 0; c < patch_side; ++c) {
                    dst[r * patch_side + c] = image.at(pr * patch_side + r, pc * patch_side + c);
                }
            }
        }
    }
    return out;
}

data::Image unpatchify(const Tensor& patches, std::size_t image_side, std::size_t patch_side) {
    const std::size_t g = image_side / patch_side;
    if (patches.shape != Shape{g * g, patch_side * patch_side}) {
        throw ShapeError("unpatchify: patch matrix " + shape_str(patches.shape) +
                         " does not match image " + std::to_string(image_side));
    }
    data::Image img(image_side, image_side);
    for (std::size_t t = 0; t < g * g; ++t) {
        const std::size_t pr = t / g, pc = t % g;
        for (std::size_t r = 0; r < patch_side; ++r) {
            for (std::size_t c = 0; c < patch_side; ++c) {
                img.at(pr * patch_side + r, pc * patch_side + c) = patches.at(t, r * patch_side + c);
            }
        }
    }
    return img;
}

void init_backbone(ParameterStore& store, const BackboneConfig& cfg, Rng& rng) {
    cfg.validate();
    const double sd = cfg.init_std;
    const std::size_t d = cfg.embed_dim;
    add_linear(store, "enc.patch_embed", cfg.patch_dim(), d, rng);
    store.add("enc.cls_token", truncated_normal({1, d}, rng, sd), false);
    store.add("enc.cls_pos", truncated_normal({1, d}, rng, sd), false);
    store.add("enc.modality", truncated_normal({data::kFamilyCount, d}, rng, sd), false);
    for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
        add_encoder_block(store, "enc.blocks." + std::to_string(l), d, rng);
    }
    add_layer_norm(store, "enc.norm", d);

    const std::size_t dd = cfg.decoder_dim;
    add_linear(store, "dec.embed", d, dd, rng);
    store.add("dec.mask_token", truncated_normal({1, dd}, rng, sd), false);
    for (std::size_t l = 0; l < cfg.decoder_layers; ++l) {
        add_encoder_block(store, "dec.blocks." + std::to_string(l), dd, rng);
    }
    add_layer_norm(store, "dec.norm", dd);
    add_linear(store, "dec.head", dd, cfg.patch_dim(), rng);
}

namespace {

std::size_t family_row(data::ProjectionFamily family) {
    const auto m = static_cast<std::size_t>(family);
    if (m >= data::kFamilyCount) {
        throw ValidationError("projection family index " + std::to_string(m) + " outside {0,1,2}");
    }
    return m;
}

}  // namespace

Var encode_tokens(Binding& p, const BackboneConfig& cfg, const Tensor& patches,
                  std::span<const std::size_t> order, data::ProjectionFamily family) {
    const std::size_t m = family_row(family);
    if (patches.shape != Shape{cfg.tokens(), cfg.patch_dim()}) {
        throw ShapeError("encode: patches " + shape_str(patches.shape) + " vs expected " +
                         shape_str({cfg.tokens(), cfg.patch_dim()}));
    }
    const std::size_t d = cfg.embed_dim;
    const std::size_t n = order.size();
    Tensor rows({n, cfg.patch_dim()});
    Tensor pos({n, d});
    const Tensor table = sincos_2d(cfg.grid(), d);
    for (std::size_t i = 0; i < n; ++i) {
        if (order[i] >= cfg.tokens()) throw ShapeError("encode: token index out of range");
        std::copy_n(patches.data.data() + order[i] * cfg.patch_dim(), cfg.patch_dim(),
                    rows.data.data() + i * cfg.patch_dim());
        std::copy_n(table.data.data() + order[i] * d, d, pos.data.data() + i * d);
    }
    const std::size_t fam[1] = {m};
    // h_t = embed(x_t) + p_t + e_m(v)
    Var tokens = linear(p, "enc.patch_embed", Var::constant(std::move(rows)));
    tokens = ad::add(tokens, Var::constant(std::move(pos)));
    tokens = ad::add(tokens, ad::gather_rows(p("enc.modality"), fam));
    const Var cls = ad::add(p("enc.cls_token"), p("enc.cls_pos"));
    const Var parts[2] = {cls, tokens};
    Var x = ad::concat(parts, 0);
    for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
        x = encoder_block(p, "enc.blocks." + std::to_string(l), x, cfg.encoder_heads);
    }
    return layer_norm_affine(p, "enc.norm", x);
}

Var encode(Binding& p, const BackboneConfig& cfg, const Tensor& patches, const MaskSpec& mask,
           data::ProjectionFamily family) {
    if (mask.total != cfg.tokens()) {
        throw ShapeError("encode: mask over " + std::to_string(mask.total) + " tokens, config has " +
                         std::to_string(cfg.tokens()));
    }
    return encode_tokens(p, cfg, patches, mask.visible, family);
}

Var decode(Binding& p, const BackboneConfig& cfg, const Var& encoding, const MaskSpec& mask,
           data::ProjectionFamily family) {
    const std::size_t m = family_row(family);
    const std::size_t t_total = cfg.tokens();
    if (mask.total != t_total || encoding.shape().size() != 2 ||
        encoding.dim(0) != 1 + mask.visible.size() || encoding.dim(1) != cfg.embed_dim) {
        throw ShapeError("decode: encoding " + shape_str(encoding.shape()) + " does not match mask with " +
                         std::to_string(mask.visible.size()) + " visible of " + std::to_string(mask.total));
    }
    const std::size_t dd = cfg.decoder_dim;
    const std::size_t n_vis = mask.visible.size();
    const std::size_t n_mask = mask.masked.size();

    const Var projected = linear(p, "dec.embed", encoding);
    // Source rows: [CLS, visible..., mask token repeated]; `order` scatters them
    // back into [CLS, token 0, ..., token T-1].
    std::vector<Var> parts{projected};
    if (n_mask > 0) {
        const std::vector<std::size_t> zeros(n_mask, 0);
        parts.push_back(ad::gather_rows(p("dec.mask_token"), zeros));
    }
    const Var pool = ad::concat(parts, 0);
    std::vector<std::size_t> order(t_total + 1);
    order[0] = 0;
    for (std::size_t i = 0; i < n_vis; ++i) order[1 + mask.visible[i]] = 1 + i;
    for (std::size_t j = 0; j < n_mask; ++j) order[1 + mask.masked[j]] = 1 + n_vis + j;
    Var x = ad::gather_rows(pool, order);

    Tensor pos({t_total + 1, dd}, 0.0);
    const Tensor table = sincos_2d(cfg.grid(), dd);
    std::copy(table.data.begin(), table.data.end(), pos.data.begin() + static_cast<std::ptrdiff_t>(dd));
    x = ad::add(x, Var::constant(std::move(pos)));

    // The encoder's modality vector, carried into decoder width by the same
    // embedding matrix, shifts every patch token (not CLS).
    const std::size_t fam[1] = {m};
    const Var shift = ad::matmul(ad::gather_rows(p("enc.modality"), fam), p("dec.embed.w"));
    const Var shift_rows[2] = {Var::constant(Tensor({1, dd}, 0.0)),
                               ad::broadcast_to(shift, {t_total, dd})};
    x = ad::add(x, ad::concat(shift_rows, 0));

    for (std::size_t l = 0; l < cfg.decoder_layers; ++l) {
        x = encoder_block(p, "dec.blocks." + std::to_string(l), x, cfg.decoder_heads);
    }
    x = layer_norm_affine(p, "dec.norm", x);
    return linear(p, "dec.head", ad::slice(x, 0, 1, t_total + 1));
}

}  // namespace mvmae::model
