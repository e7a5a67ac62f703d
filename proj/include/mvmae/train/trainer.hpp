#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvmae/config.hpp"
#include "mvmae/data/study.hpp"
#include "mvmae/eval/metrics.hpp"
#include "mvmae/model/mvmae.hpp"
#include "mvmae/objectives/losses.hpp"
#include "mvmae/text/vocabulary.hpp"
#include "mvmae/train/checkpoint.hpp"

namespace mvmae::train {

// Strips labels; tokenizes reports when a vocabulary is given.
std::vector<model::PretrainStudy> pretrain_view(std::span<const data::Study> studies,
                                                const text::Vocabulary* vocab, std::size_t max_len);

// Study indices drawn at `step`: consecutive slots of an endless sequence of
// per-epoch permutations of [0, n) seeded by `seed`.
std::vector<std::size_t> batch_items(std::size_t n, std::uint64_t seed, std::size_t step, std::size_t batch);

// Seeds of the per-slot augmentation and mask streams of a pretraining step.
std::uint64_t slot_seed(std::uint64_t seed, std::size_t step, std::size_t slot);
std::uint64_t mask_seed(std::uint64_t slot_seed);

struct PretrainOptions {
    std::filesystem::path run_dir;  // empty: nothing written
    const Checkpoint* resume = nullptr;
    std::size_t stop_after = 0;  // stop once this many steps are done (0: run to the end)
    std::function<void(std::size_t, const objectives::LossBundle&)> on_step;
};

struct PretrainResult {
    Checkpoint checkpoint;
    std::vector<objectives::LossBundle> log;
};

// Minimizes rec + beta * align (+ ce for the report-supervised mode) over
// study batches. `vocab` is required for pretrain_mvmae_v2t.
PretrainResult pretrain(std::span<const model::PretrainStudy> studies, const ExperimentConfig& cfg,
                        const text::Vocabulary* vocab = nullptr, const PretrainOptions& opt = {});

// Configuration stored in a checkpoint.
ExperimentConfig checkpoint_config(const Checkpoint& ck);

// Encoder with freshly initialized weights under `cfg`, as a checkpoint.
Checkpoint fresh_encoder(const ExperimentConfig& cfg, std::uint64_t seed);

// Deterministic subset of `n` indices out of [0, pool) for `seed`.
std::vector<std::size_t> subset_indices(std::size_t pool, std::size_t n, std::uint64_t seed);

struct ClassifierOptions {
    std::filesystem::path run_dir;
    std::function<void(std::size_t, double)> on_step;  // (step, batch loss)
};

struct ClassifierResult {
    Checkpoint checkpoint;  // "enc.*" and "head.*"
    std::size_t selected_step = 0;
    std::optional<double> selected_val_auroc;
    std::vector<double> loss_log;
};

// Trains the 14-way head (and, except for linear_probe, the encoder) with
// BCE. linear_probe and finetune need `encoder`; supervised starts fresh.
// The returned parameters are those with the best validation macro AUROC.
ClassifierResult train_classifier(std::span<const data::Study> train, std::span<const data::Study> val,
                                  const ExperimentConfig& cfg, const Checkpoint* encoder,
                                  const ClassifierOptions& opt = {});

// Per-view sigmoid scores from a classifier checkpoint.
std::vector<eval::StudyScores> predict(const Checkpoint& classifier, std::span<const data::Study> studies,
                                       std::size_t threads = 0);

}  // namespace mvmae::train
