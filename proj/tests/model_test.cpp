#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mvmae/autodiff/gradcheck.hpp"
#include "mvmae/autodiff/ops.hpp"
#include "mvmae/errors.hpp"
#include "mvmae/model/backbone.hpp"
#include "mvmae/model/mvmae.hpp"
#include "mvmae/model/transformer.hpp"
#include "mvmae/rng.hpp"

namespace mvmae::model {
namespace {

using ad::Var;
using data::ProjectionFamily;

data::Image random_image(Rng& rng, std::size_t side) {
    data::Image img(side, side);
    for (double& v : img.pixels) v = rng.uniform();
    return img;
}

BackboneConfig tiny_config() {
    BackboneConfig c;
    c.image_side = 16;
    c.patch_side = 8;
    c.embed_dim = 8;
    c.encoder_layers = 1;
    c.encoder_heads = 2;
    c.decoder_dim = 8;
    c.decoder_layers = 1;
    c.decoder_heads = 2;
    c.mask_ratio = 0.5;
    return c;
}

std::vector<double> values(const Var& v) { return {v.value().begin(), v.value().end()}; }

TEST(Patchify, RasterOrderOnFourByFour) {
    data::Image img(4, 4);
    for (std::size_t i = 0; i < 16; ++i) img.pixels[i] = static_cast<double>(i);
    const Tensor p = patchify(img, 2);
    ASSERT_EQ(p.shape, (Shape{4, 4}));
    const std::vector<double> want{0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15};
    EXPECT_EQ(p.data, want);
    EXPECT_EQ(unpatchify(p, 4, 2).pixels, img.pixels);
}

TEST(Patchify, ConstantImageGivesIdenticalRowsAndRoundTrips) {
    const Tensor p = patchify(data::Image(32, 32, 0.3), 8);
    for (std::size_t t = 1; t < p.shape[0]; ++t) {
        EXPECT_TRUE(std::equal(p.row(t).begin(), p.row(t).end(), p.row(0).begin()));
    }
    Rng rng(1);
    const data::Image img = random_image(rng, 32);
    EXPECT_EQ(unpatchify(patchify(img, 8), 32, 8).pixels, img.pixels);
}

TEST(Patchify, ShapeErrors) {
    EXPECT_THROW(patchify(data::Image(30, 30), 8), ShapeError);
    EXPECT_THROW(patchify(data::Image(32, 16), 8), ShapeError);
    EXPECT_THROW(unpatchify(Tensor({3, 64}), 32, 8), ShapeError);
}

TEST(Mask, CardinalityIsFloorOfAlphaT) {
    EXPECT_EQ(masked_count(196, 0.9), 176u);
    Rng rng(2);
    for (std::size_t t : {2u, 4u, 16u, 49u, 196u}) {
        for (double a : {0.1, 0.25, 0.5, 0.75, 0.9}) {
            const std::size_t m = masked_count(t, a);
            if (m < 1 || m >= t) {
                EXPECT_THROW(sample_mask(t, a, rng), ValidationError);
                continue;
            }
            EXPECT_EQ(m, static_cast<std::size_t>(std::floor(a * static_cast<double>(t) + 1e-9)));
            const MaskSpec s = sample_mask(t, a, rng);
            ASSERT_EQ(s.masked.size(), m);
            ASSERT_EQ(s.visible.size(), t - m);
            std::vector<std::size_t> all = s.visible;
            all.insert(all.end(), s.masked.begin(), s.masked.end());
            std::sort(all.begin(), all.end());
            std::vector<std::size_t> want(t);
            std::iota(want.begin(), want.end(), std::size_t{0});
            EXPECT_EQ(all, want);
            EXPECT_TRUE(std::is_sorted(s.visible.begin(), s.visible.end()));
        }
    }
}

TEST(Mask, DefaultRatioOnBaseGridAndBoundary) {
    Rng rng(3);
    const MaskSpec m = sample_mask(196, 0.9, rng);
    EXPECT_EQ(m.masked.size(), 176u);
    EXPECT_EQ(m.visible.size(), 20u);
    EXPECT_EQ(sample_mask(16, 15.5 / 16.0, rng).visible.size(), 1u);
}

TEST(Mask, DeterministicForFixedRngState) {
    Rng a(99), b(99);
    EXPECT_EQ(sample_mask(16, 0.75, a).visible, sample_mask(16, 0.75, b).visible);
}

TEST(Mask, EveryTokenGetsMasked) {
    Rng rng(4);
    std::vector<int> hits(16, 0);
    for (int i = 0; i < 400; ++i) {
        for (std::size_t t : sample_mask(16, 0.75, rng).masked) ++hits[t];
    }
    for (int h : hits) EXPECT_GT(h, 200);
}

TEST(BackboneConfig, PresetsAndValidation) {
    const BackboneConfig micro = BackboneConfig::preset("vit-micro");
    EXPECT_EQ(micro.tokens(), 16u);
    EXPECT_EQ(micro.patch_dim(), 64u);
    EXPECT_NO_THROW(micro.validate());
    const BackboneConfig base = BackboneConfig::preset("vit-base-16");
    EXPECT_EQ(base.tokens(), 196u);
    EXPECT_EQ(base.embed_dim, 768u);
    EXPECT_EQ(base.encoder_layers, 12u);
    EXPECT_EQ(base.masked_count(), 176u);
    EXPECT_NO_THROW(base.validate());
    EXPECT_THROW(BackboneConfig::preset("vit-huge"), ValidationError);

    BackboneConfig bad = micro;
    bad.image_side = 30;
    EXPECT_THROW(bad.validate(), ValidationError);
    bad = micro;
    bad.mask_ratio = 0.01;  // masks nothing at T = 16
    EXPECT_THROW(bad.validate(), ValidationError);
    bad = micro;
    bad.embed_dim = 30;
    EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(SinCos, BoundedAndDistinctRows) {
    const Tensor t = sincos_2d(4, 16);
    ASSERT_EQ(t.shape, (Shape{16, 16}));
    for (double v : t.data) {
        EXPECT_LE(std::abs(v), 1.0);
    }
    for (std::size_t a = 0; a < 16; ++a) {
        for (std::size_t b = a + 1; b < 16; ++b) {
            EXPECT_FALSE(std::equal(t.row(a).begin(), t.row(a).end(), t.row(b).begin()));
        }
    }
}

class BackboneTest : public ::testing::Test {
protected:
    BackboneTest() {
        Rng init(5);
        init_backbone(store_, cfg_, init);
        Rng rng(6);
        patches_ = patchify(random_image(rng, 32), 8);
        mask_ = sample_mask(cfg_.tokens(), cfg_.mask_ratio, rng);
    }
    Var encode_with(const ParameterStore& store, const Tensor& patches, ProjectionFamily f) const {
        Binding p = Binding::frozen(store);
        return encode(p, cfg_, patches, mask_, f);
    }

    BackboneConfig cfg_ = [] {
        BackboneConfig c;
        c.mask_ratio = 0.75;
        return c;
    }();
    ParameterStore store_;
    Tensor patches_;
    MaskSpec mask_;
};

TEST_F(BackboneTest, EncodingHasClsPlusVisibleRows) {
    const Var z = encode_with(store_, patches_, ProjectionFamily::frontal);
    EXPECT_EQ(z.shape(), (Shape{1 + mask_.visible.size(), cfg_.embed_dim}));
    EXPECT_EQ(mask_.visible.size(), 4u);
}

TEST_F(BackboneTest, SameInputsSameEncodingAndFamilyMatters) {
    const auto a = values(encode_with(store_, patches_, ProjectionFamily::frontal));
    const auto b = values(encode_with(store_, patches_, ProjectionFamily::frontal));
    const auto c = values(encode_with(store_, patches_, ProjectionFamily::lateral));
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_THROW(encode_with(store_, patches_, static_cast<ProjectionFamily>(3)), ValidationError);
}

TEST_F(BackboneTest, EncoderIgnoresMaskedPixels) {
    Tensor other = patches_;
    for (std::size_t t : mask_.masked) {
        for (std::size_t c = 0; c < cfg_.patch_dim(); ++c) other.at(t, c) += 5.0;
    }
    EXPECT_EQ(values(encode_with(store_, patches_, ProjectionFamily::frontal)),
              values(encode_with(store_, other, ProjectionFamily::frontal)));
}

TEST_F(BackboneTest, PermutedTokenOrderPermutesRows) {
    std::vector<std::size_t> order = mask_.visible;
    std::vector<std::size_t> perm(order.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[0], perm[1]);
    std::vector<std::size_t> shuffled(order.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = order[perm[i]];

    Binding p = Binding::frozen(store_);
    const Var z = encode_tokens(p, cfg_, patches_, order, ProjectionFamily::lateral);
    const Var zp = encode_tokens(p, cfg_, patches_, shuffled, ProjectionFamily::lateral);
    const std::size_t d = cfg_.embed_dim;
    for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(zp.value()[c], z.value()[c], 1e-12);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            EXPECT_NEAR(zp.value()[(1 + i) * d + c], z.value()[(1 + perm[i]) * d + c], 1e-12);
        }
    }
}

TEST_F(BackboneTest, DecodeShapeAndZeroHead) {
    Binding p = Binding::frozen(store_);
    const Var z = encode(p, cfg_, patches_, mask_, ProjectionFamily::frontal);
    const Var x = decode(p, cfg_, z, mask_, ProjectionFamily::frontal);
    EXPECT_EQ(x.shape(), (Shape{cfg_.tokens(), cfg_.patch_dim()}));

    ParameterStore zeroed = store_;
    for (double& v : zeroed.get("dec.head.w").value.data) v = 0.0;
    Binding pz = Binding::frozen(zeroed);
    const Var xz = decode(pz, cfg_, encode(pz, cfg_, patches_, mask_, ProjectionFamily::frontal), mask_,
                          ProjectionFamily::frontal);
    for (double v : xz.value()) EXPECT_EQ(v, 0.0);

    const MaskSpec other = MaskSpec::all_visible(cfg_.tokens());
    EXPECT_THROW(decode(p, cfg_, z, other, ProjectionFamily::frontal), ShapeError);
}

TEST_F(BackboneTest, MaskTokenReachesMaskedOutputsOnly) {
    ParameterStore bumped = store_;
    for (double& v : bumped.get("dec.mask_token").value.data) v += 0.5;
    // The encoder never sees the mask token.
    EXPECT_EQ(values(encode_with(store_, patches_, ProjectionFamily::frontal)),
              values(encode_with(bumped, patches_, ProjectionFamily::frontal)));

    auto reconstruct = [&](const ParameterStore& s) {
        Binding p = Binding::frozen(s);
        return decode(p, cfg_, encode(p, cfg_, patches_, mask_, ProjectionFamily::frontal), mask_,
                      ProjectionFamily::frontal)
            .tensor();
    };
    const Tensor a = reconstruct(store_), b = reconstruct(bumped);
    for (std::size_t t : mask_.masked) {
        EXPECT_FALSE(std::equal(a.row(t).begin(), a.row(t).end(), b.row(t).begin())) << t;
    }

    // With every token visible the mask token is not in the graph at all.
    const MaskSpec full = MaskSpec::all_visible(cfg_.tokens());
    auto full_rec = [&](const ParameterStore& s) {
        Binding p = Binding::frozen(s);
        return values(decode(p, cfg_, encode(p, cfg_, patches_, full, ProjectionFamily::frontal), full,
                             ProjectionFamily::frontal));
    };
    EXPECT_EQ(full_rec(store_), full_rec(bumped));
}

TEST_F(BackboneTest, ModalityGradientSumsOverFrontalViews) {
    Rng rng(8);
    const Tensor second = patchify(random_image(rng, 32), 8);
    // Gradient of sum(encoding) w.r.t. enc.modality for the given views.
    auto modality_grad = [&](const std::vector<const Tensor*>& views) {
        std::vector<Var> leaves;
        for (const auto& prm : store_.params()) leaves.push_back(Var::leaf(prm.value));
        Binding p(store_, leaves);
        Var total;
        for (const Tensor* v : views) {
            const Var s = ad::sum(encode(p, cfg_, *v, mask_, ProjectionFamily::frontal));
            total = total.defined() ? ad::add(total, s) : s;
        }
        total.backward();
        const auto g = leaves[store_.index_of("enc.modality")].grad();
        return std::vector<double>(g.begin(), g.end());
    };
    const auto g1 = modality_grad({&patches_});
    const auto g2 = modality_grad({&second});
    const auto both = modality_grad({&patches_, &second});
    const std::size_t d = cfg_.embed_dim;
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < d; ++c) {
        // Frontal row collects both views; the other rows get nothing.
        EXPECT_NEAR(both[c], g1[c] + g2[c], 1e-12);
        nonzero += g1[c] != 0.0 && g2[c] != 0.0;
        EXPECT_EQ(both[d + c], 0.0);
        EXPECT_EQ(both[2 * d + c], 0.0);
    }
    EXPECT_GT(nonzero, 0u);
}

TEST(Backbone, TinyConfigStudyLossPassesGradCheck) {
    const BackboneConfig bb = tiny_config();
    ModelConfig cfg;
    cfg.backbone = bb;
    ParameterStore store;
    Rng init(12);
    init_model(store, cfg, init);
    Rng rng(13);
    const std::vector<Tensor> patches{patchify(random_image(rng, 16), 8), patchify(random_image(rng, 16), 8)};
    const std::vector<ProjectionFamily> fams{ProjectionFamily::frontal, ProjectionFamily::lateral};
    std::vector<Tensor> point;
    for (const auto& prm : store.params()) point.push_back(prm.value);
    auto f = [&](std::span<const Var> leaves) {
        Binding p(store, std::vector<Var>(leaves.begin(), leaves.end()));
        Rng mask_rng(14);
        const StudyTerms t = study_forward(p, cfg, patches, fams, std::nullopt, mask_rng);
        return ad::add(t.rec, t.align);
    };
    const auto r = ad::grad_check(f, point, {.epsilon = 1e-5, .tolerance = 1e-3, .floor = 1e-7});
    EXPECT_TRUE(r.passed) << r.max_rel_error << " at input " << r.worst_input << "[" << r.worst_index
                          << "] analytic " << r.worst_analytic << " numeric " << r.worst_numeric;
}

TEST(StudyModel, TermsFollowConfiguration) {
    ModelConfig cfg;
    cfg.backbone.mask_ratio = 0.75;
    ParameterStore store;
    Rng init(15);
    init_model(store, cfg, init);
    Rng rng(16);
    const std::vector<Tensor> one{patchify(random_image(rng, 32), 8)};
    const std::vector<ProjectionFamily> fam{ProjectionFamily::frontal};
    Binding p = Binding::frozen(store);
    Rng r1(1);
    StudyTerms t = study_forward(p, cfg, one, fam, std::nullopt, r1);
    EXPECT_GT(t.rec.item(), 0.0);
    EXPECT_EQ(t.align.item(), 0.0);
    EXPECT_FALSE(t.ce.defined());

    cfg.objective.align_enabled = false;
    Rng r2(1);
    t = study_forward(p, cfg, one, fam, std::nullopt, r2);
    EXPECT_FALSE(t.align.defined());
    EXPECT_THROW(study_forward(p, cfg, {}, {}, std::nullopt, r2), ValidationError);
}

TEST(StudyModel, IndependentMasksScoreEachViewOnItsOwnMask) {
    ModelConfig cfg;
    cfg.backbone.mask_ratio = 0.75;
    cfg.objective.independent_masks = true;
    ParameterStore store;
    Rng init(17);
    init_model(store, cfg, init);
    Rng rng(18);
    const Tensor x = patchify(random_image(rng, 32), 8);
    const std::vector<Tensor> two{x, x};
    const std::vector<ProjectionFamily> fams{ProjectionFamily::frontal, ProjectionFamily::frontal};
    Binding p = Binding::frozen(store);
    Rng r(3);
    const StudyTerms t = study_forward(p, cfg, two, fams, std::nullopt, r);
    EXPECT_TRUE(std::isfinite(t.rec.item()));
    EXPECT_GE(t.align.item(), 0.0);
}

TEST(StudyModel, ClassifierHeadAndBce) {
    ParameterStore store;
    Rng rng(19);
    init_classifier_head(store, 32, rng);
    EXPECT_TRUE(store.contains("head.w"));
    EXPECT_EQ(store.get("head.w").value.shape, (Shape{32, data::kNumLabels}));
    const Var zero = Var::constant(Tensor({2, data::kNumLabels}, 0.0));
    EXPECT_NEAR(bce_with_logits(zero, Tensor({2, data::kNumLabels}, 1.0)).item(), std::log(2.0), 1e-15);
    EXPECT_THROW(bce_with_logits(zero, Tensor({1, data::kNumLabels})), ShapeError);
    EXPECT_TRUE(is_encoder_param("enc.blocks.0.attn.q.w"));
    EXPECT_FALSE(is_encoder_param("dec.embed.w"));
    EXPECT_FALSE(is_encoder_param("head.w"));
}

}  // namespace
}  // namespace mvmae::model
