#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvmae/config.hpp"
#include "mvmae/data/study.hpp"
#include "mvmae/train/checkpoint.hpp"

namespace mvmae::eval {

struct LabelEfficiencyRow {
    std::size_t size = 0;
    std::optional<double> macro_auroc;  // on `test`, fused over all views
    std::optional<double> val_auroc;    // of the selected checkpoint
    std::size_t selected_step = 0;
};

// One train_classifier run per subset size under cfg.train.mode, each scored
// on the same test studies. Sizes must be strictly ascending and no larger
// than the labeled pool.
std::vector<LabelEfficiencyRow> label_efficiency(std::span<const data::Study> train,
                                                 std::span<const data::Study> val,
                                                 std::span<const data::Study> test, const ExperimentConfig& cfg,
                                                 const train::Checkpoint* encoder,
                                                 std::span<const std::size_t> sizes);

// Studies with exactly two views.
std::vector<data::Study> two_view_studies(std::span<const data::Study> studies);

struct AblationRow {
    std::string dataset;  // "combined" or a dataset tag
    std::size_t views = 0;  // 1: first view only, 2: both fused
    std::optional<double> mvmae;
    std::optional<double> independent;
    std::optional<double> delta;  // mvmae - independent
};

// Scores the exactly-two-view subset of `studies` with two classifier
// checkpoints. ValidationError when no study has exactly two views.
std::vector<AblationRow> two_view_ablation(const train::Checkpoint& mvmae, const train::Checkpoint& independent,
                                           std::span<const data::Study> studies, bool prefer_frontal = false,
                                           std::size_t threads = 0);

struct Summary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation; 0 for a single value
    std::size_t n = 0;
};
Summary summarize(std::span<const double> values);

}  // namespace mvmae::eval
