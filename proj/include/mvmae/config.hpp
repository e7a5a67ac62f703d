#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvmae/data/augment.hpp"
#include "mvmae/data/split.hpp"
#include "mvmae/model/mvmae.hpp"
#include "mvmae/text/decoder.hpp"
#include "mvmae/train/optimizer.hpp"

namespace mvmae {

enum class TrainMode { pretrain_mvmae, pretrain_mvmae_v2t, supervised, linear_probe, finetune };

std::string_view mode_name(TrainMode m);
TrainMode parse_mode(std::string_view s);  // UsageError on unknown names
bool is_pretrain(TrainMode m);

struct TrainConfig {
    TrainMode mode = TrainMode::pretrain_mvmae;
    std::size_t steps = 600;
    std::size_t batch_size = 16;  // studies
    double lr = 1e-3;
    double min_lr = 1e-5;
    std::size_t warmup_steps = 30;
    train::AdamWConfig adam;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // 0: final checkpoint only
    std::optional<std::size_t> subset_size;
    std::size_t eval_every = 0;  // classifier validation cadence; 0: end only
    std::size_t threads = 0;     // 0: OpenMP default
    data::AugmentConfig augment;
    bool shared_augment = false;
    double beta_target = 1.0;
    double anneal_fraction = 0.1;
};

struct EvalConfig {
    double threshold = 0.5;
    bool prefer_frontal = false;  // single-view policy; default is the first listed view
};

struct ExperimentConfig {
    model::BackboneConfig backbone;
    model::ObjectiveConfig objective;
    text::TextDecoderConfig text;  // vocab_size filled from data
    std::size_t vocab_min_count = 1;
    TrainConfig train;
    data::SplitSpec split;
    EvalConfig eval;

    // Model configuration implied by the mode (text head only for v2t).
    model::ModelConfig model_config() const;

    // Canonical "key = value" dump, one key per line in a fixed order.
    std::string dump() const;
    std::uint64_t hash() const;  // FNV-1a of dump()

    void set(std::string_view key, std::string_view value);  // ValidationError on unknown key
    void validate() const;

    static std::vector<std::string> keys();
};

// Lines of `key = value`, '#' comments, blank lines ignored. backbone.preset
// is applied before the other backbone keys wherever it appears.
ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view s);

}  // namespace mvmae
