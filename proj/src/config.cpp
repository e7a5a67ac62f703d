#include "mvmae/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "mvmae/errors.hpp"

namespace mvmae {

namespace {

constexpr std::string_view kModeNames[] = {"pretrain_mvmae", "pretrain_mvmae_v2t", "supervised",
                                           "linear_probe", "finetune"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ValidationError("config key " + std::string(key) + ": expected a non-negative integer, got '" +
                              std::string(v) + "'");
    }
    return out;
}

double to_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d)) {
        throw ValidationError("config key " + std::string(key) + ": expected a number, got '" + s + "'");
    }
    return d;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config key " + std::string(key) + ": expected true/false, got '" + std::string(v) + "'");
}

std::string fmt(double d) {
    std::ostringstream o;
    o.precision(17);
    o << d;
    return o.str();
}

struct Entry {
    std::string key;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define SIZE_KEY(name, field)                                                                \
    Entry {                                                                                  \
        name, [](ExperimentConfig& c, std::string_view v) { c.field = to_size(name, v); },   \
            [](const ExperimentConfig& c) { return std::to_string(c.field); }                \
    }
#define DOUBLE_KEY(name, field)                                                              \
    Entry {                                                                                  \
        name, [](ExperimentConfig& c, std::string_view v) { c.field = to_double(name, v); }, \
            [](const ExperimentConfig& c) { return fmt(c.field); }                           \
    }
#define BOOL_KEY(name, field)                                                                \
    Entry {                                                                                  \
        name, [](ExperimentConfig& c, std::string_view v) { c.field = to_bool(name, v); },   \
            [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); } \
    }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        SIZE_KEY("backbone.image_side", backbone.image_side),
        SIZE_KEY("backbone.patch_side", backbone.patch_side),
        SIZE_KEY("backbone.embed_dim", backbone.embed_dim),
        SIZE_KEY("backbone.encoder_layers", backbone.encoder_layers),
        SIZE_KEY("backbone.encoder_heads", backbone.encoder_heads),
        SIZE_KEY("backbone.decoder_dim", backbone.decoder_dim),
        SIZE_KEY("backbone.decoder_layers", backbone.decoder_layers),
        SIZE_KEY("backbone.decoder_heads", backbone.decoder_heads),
        DOUBLE_KEY("backbone.mask_ratio", backbone.mask_ratio),
        DOUBLE_KEY("backbone.init_std", backbone.init_std),
        BOOL_KEY("objective.align_enabled", objective.align_enabled),
        BOOL_KEY("objective.include_cls", objective.include_cls),
        BOOL_KEY("objective.independent_masks", objective.independent_masks),
        BOOL_KEY("objective.per_token_mean", objective.rec.per_token_mean),
        BOOL_KEY("objective.normalized_target", objective.rec.normalized_target),
        DOUBLE_KEY("objective.beta", train.beta_target),
        DOUBLE_KEY("objective.anneal_fraction", train.anneal_fraction),
        SIZE_KEY("text.layers", text.layers),
        SIZE_KEY("text.heads", text.heads),
        SIZE_KEY("text.dim", text.dim),
        SIZE_KEY("text.max_len", text.max_len),
        SIZE_KEY("text.min_count", vocab_min_count),
        Entry{"train.mode",
              [](ExperimentConfig& c, std::string_view v) {
                  try {
                      c.train.mode = parse_mode(v);
                  } catch (const UsageError& e) {
                      throw ValidationError(e.what());
                  }
              },
              [](const ExperimentConfig& c) { return std::string(mode_name(c.train.mode)); }},
        SIZE_KEY("train.steps", train.steps),
        SIZE_KEY("train.batch_size", train.batch_size),
        DOUBLE_KEY("train.lr", train.lr),
        DOUBLE_KEY("train.min_lr", train.min_lr),
        SIZE_KEY("train.warmup_steps", train.warmup_steps),
        DOUBLE_KEY("train.weight_decay", train.adam.weight_decay),
        DOUBLE_KEY("train.beta1", train.adam.beta1),
        DOUBLE_KEY("train.beta2", train.adam.beta2),
        DOUBLE_KEY("train.eps", train.adam.eps),
        DOUBLE_KEY("train.grad_clip", train.grad_clip),
        SIZE_KEY("train.seed", train.seed),
        SIZE_KEY("train.checkpoint_every", train.checkpoint_every),
        Entry{"train.subset_size",
              [](ExperimentConfig& c, std::string_view v) {
                  if (v == "none" || v.empty()) {
                      c.train.subset_size.reset();
                  } else {
                      c.train.subset_size = to_size("train.subset_size", v);
                  }
              },
              [](const ExperimentConfig& c) {
                  return c.train.subset_size ? std::to_string(*c.train.subset_size) : std::string("none");
              }},
        SIZE_KEY("train.eval_every", train.eval_every),
        SIZE_KEY("train.threads", train.threads),
        BOOL_KEY("augment.enabled", train.augment.enabled),
        DOUBLE_KEY("augment.crop_scale_min", train.augment.crop_scale_min),
        BOOL_KEY("augment.flip", train.augment.flip),
        DOUBLE_KEY("augment.jitter", train.augment.jitter),
        BOOL_KEY("augment.shared", train.shared_augment),
        DOUBLE_KEY("split.train", split.train),
        DOUBLE_KEY("split.val", split.val),
        DOUBLE_KEY("split.test", split.test),
        SIZE_KEY("split.seed", split.seed),
        DOUBLE_KEY("eval.threshold", eval.threshold),
        BOOL_KEY("eval.prefer_frontal", eval.prefer_frontal),
    };
    return table;
}

}  // namespace

std::string_view mode_name(TrainMode m) { return kModeNames[static_cast<int>(m)]; }

TrainMode parse_mode(std::string_view s) {
    for (std::size_t i = 0; i < std::size(kModeNames); ++i) {
        if (kModeNames[i] == s) return static_cast<TrainMode>(i);
    }
    throw UsageError("unknown mode '" + std::string(s) +
                     "' (expected pretrain_mvmae, pretrain_mvmae_v2t, supervised, linear_probe or finetune)");
}

bool is_pretrain(TrainMode m) { return m == TrainMode::pretrain_mvmae || m == TrainMode::pretrain_mvmae_v2t; }

model::ModelConfig ExperimentConfig::model_config() const {
    model::ModelConfig m;
    m.backbone = backbone;
    m.objective = objective;
    if (train.mode == TrainMode::pretrain_mvmae_v2t) m.text = text;
    return m;
}

std::string ExperimentConfig::dump() const {
    std::string out;
    for (const auto& e : entries()) out += e.key + " = " + e.get(*this) + "\n";
    return out;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(dump()); }

void ExperimentConfig::set(std::string_view key, std::string_view value) {
    if (key == "backbone.preset") {
        backbone = model::BackboneConfig::preset(value);
        return;
    }
    for (const auto& e : entries()) {
        if (e.key == key) {
            e.set(*this, value);
            return;
        }
    }
    throw ValidationError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::string> ExperimentConfig::keys() {
    std::vector<std::string> k{"backbone.preset"};
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
}

void ExperimentConfig::validate() const {
    backbone.validate();
    if (train.batch_size == 0) throw ValidationError("train.batch_size must be positive");
    if (!(train.lr > 0.0)) throw ValidationError("train.lr must be positive");
    if (train.min_lr < 0.0 || train.min_lr > train.lr) throw ValidationError("train.min_lr must lie in [0, lr]");
    if (train.adam.weight_decay < 0.0) throw ValidationError("train.weight_decay must be non-negative");
    if (!(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0 && train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0)) {
        throw ValidationError("train.beta1/beta2 must lie in [0, 1)");
    }
    if (train.beta_target < 0.0) throw ValidationError("objective.beta must be non-negative");
    if (train.anneal_fraction < 0.0 || train.anneal_fraction > 1.0) {
        throw ValidationError("objective.anneal_fraction must lie in [0, 1]");
    }
    if (train.augment.crop_scale_min <= 0.0 || train.augment.crop_scale_min > 1.0) {
        throw ValidationError("augment.crop_scale_min must lie in (0, 1]");
    }
    if (text.max_len < 2) throw ValidationError("text.max_len must be at least 2");
    if (eval.threshold <= 0.0 || eval.threshold >= 1.0) throw ValidationError("eval.threshold must lie in (0, 1)");
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    ExperimentConfig c;
    auto apply = [&](const std::string& k, const std::string& v) {
        try {
            c.set(k, v);
        } catch (const ValidationError& e) {
            throw ValidationError(origin + ": " + e.what());
        }
    };
    for (const auto& [k, v] : kv) {
        if (k == "backbone.preset") apply(k, v);
    }
    for (const auto& [k, v] : kv) {
        if (k != "backbone.preset") apply(k, v);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

}  // namespace mvmae
