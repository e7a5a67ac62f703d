#include "mvmae/model/mvmae.hpp"

#include "mvmae/autodiff/ops.hpp"
#include "mvmae/errors.hpp"

namespace mvmae::model {

using ad::Var;

StudyTerms study_forward(Binding& p, const ModelConfig& cfg, const std::vector<Tensor>& patches,
                         const std::vector<data::ProjectionFamily>& families,
                         const std::optional<std::vector<std::size_t>>& report, Rng& rng) {
    const auto& bb = cfg.backbone;
    const std::size_t n = patches.size();
    if (n == 0) throw ValidationError("study has no views");
    if (families.size() != n) throw ShapeError("study_forward: families and views differ in count");

    std::vector<MaskSpec> masks;
    if (cfg.objective.independent_masks) {
        for (std::size_t v = 0; v < n; ++v) masks.push_back(sample_mask(bb.tokens(), bb.mask_ratio, rng));
    } else {
        masks.assign(n, sample_mask(bb.tokens(), bb.mask_ratio, rng));
    }
    std::vector<Var> enc, rec;
    enc.reserve(n);
    rec.reserve(n);
    for (std::size_t v = 0; v < n; ++v) {
        enc.push_back(encode(p, bb, patches[v], masks[v], families[v]));
        rec.push_back(decode(p, bb, enc.back(), masks[v], families[v]));
    }
    StudyTerms out;
    if (cfg.objective.independent_masks) {
        // Each view is scored against its own mask; the normalization matches
        // the shared-mask case because every mask has the same cardinality.
        Var total;
        for (std::size_t v = 0; v < n; ++v) {
            const Var term = objectives::loss_rec({&patches[v], 1}, {&rec[v], 1}, masks[v], cfg.objective.rec);
            total = total.defined() ? ad::add(total, term) : term;
        }
        out.rec = ad::scale(total, 1.0 / static_cast<double>(n));
        if (cfg.objective.align_enabled) {
            out.align = objectives::loss_align_intersection(enc, masks, cfg.objective.include_cls);
        }
    } else {
        out.rec = objectives::loss_rec(patches, rec, masks[0], cfg.objective.rec);
        if (cfg.objective.align_enabled) out.align = objectives::loss_align(enc, masks[0], cfg.objective.include_cls);
    }
    if (cfg.text && report && !report->empty()) out.ce = text::loss_ce(p, *cfg.text, enc, *report);
    return out;
}

void init_model(ParameterStore& store, const ModelConfig& cfg, Rng& rng) {
    init_backbone(store, cfg.backbone, rng);
    if (cfg.text) text::init_text_decoder(store, *cfg.text, cfg.backbone.embed_dim, rng, cfg.backbone.init_std);
}

void init_classifier_head(ParameterStore& store, std::size_t embed_dim, Rng& rng) {
    add_linear(store, "head", embed_dim, data::kNumLabels, rng);
}

Var view_embedding(Binding& p, const BackboneConfig& cfg, const Tensor& patches, data::ProjectionFamily family) {
    const Var z = encode(p, cfg, patches, MaskSpec::all_visible(cfg.tokens()), family);
    return ad::slice(z, 0, 0, 1);
}

Var head_logits(Binding& p, const Var& embedding) { return linear(p, "head", embedding); }

Var bce_with_logits(const Var& logits, const Tensor& targets) {
    if (logits.shape() != targets.shape) {
        throw ShapeError("bce: logits " + shape_str(logits.shape()) + " vs targets " + shape_str(targets.shape));
    }
    // softplus(z) - y z
    const Var per = ad::sub(ad::softplus(logits), ad::mul(logits, Var::constant(targets)));
    return ad::mean(per);
}

bool is_encoder_param(std::string_view name) { return name.rfind("enc.", 0) == 0; }

}  // namespace mvmae::model
