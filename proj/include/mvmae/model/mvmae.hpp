#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mvmae/autodiff/var.hpp"
#include "mvmae/data/study.hpp"
#include "mvmae/model/backbone.hpp"
#include "mvmae/model/params.hpp"
#include "mvmae/objectives/losses.hpp"
#include "mvmae/rng.hpp"
#include "mvmae/text/decoder.hpp"

namespace mvmae::model {

struct ObjectiveConfig {
    bool align_enabled = true;  // false drops the alignment term from the graph entirely
    bool include_cls = true;
    bool independent_masks = false;  // align on the intersection of per-view visible sets
    objectives::RecOptions rec;
};

struct ModelConfig {
    BackboneConfig backbone;
    ObjectiveConfig objective;
    std::optional<text::TextDecoderConfig> text;  // set for the report-supervised variant
};

// What pretraining sees of a study: pixels, families and report tokens.
// Labels are deliberately absent.
struct PretrainStudy {
    std::string study_id;
    std::vector<data::Image> images;
    std::vector<data::ProjectionFamily> families;
    std::optional<std::vector<std::size_t>> report;  // token ids, terminated
};

struct StudyTerms {
    ad::Var rec;
    ad::Var align;  // undefined when alignment is disabled
    ad::Var ce;     // undefined without a text head or report
};

// Samples the mask(s) from `rng`, encodes, decodes and scores one study.
StudyTerms study_forward(Binding& p, const ModelConfig& cfg, const std::vector<Tensor>& patches,
                         const std::vector<data::ProjectionFamily>& families,
                         const std::optional<std::vector<std::size_t>>& report, Rng& rng);

void init_model(ParameterStore& store, const ModelConfig& cfg, Rng& rng);

// Linear 14-way head on the CLS embedding: "head.w", "head.b".
void init_classifier_head(ParameterStore& store, std::size_t embed_dim, Rng& rng);

// CLS embedding of an unmasked view.
ad::Var view_embedding(Binding& p, const BackboneConfig& cfg, const Tensor& patches,
                       data::ProjectionFamily family);

ad::Var head_logits(Binding& p, const ad::Var& embedding);  // rows x 14

// Mean over labels and rows of BCE-with-logits.
ad::Var bce_with_logits(const ad::Var& logits, const Tensor& targets);

bool is_encoder_param(std::string_view name);

}  // namespace mvmae::model
