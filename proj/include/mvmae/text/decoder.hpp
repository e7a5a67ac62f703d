#pragma once

#include <cstddef>
#include <span>

#include "mvmae/autodiff/var.hpp"
#include "mvmae/model/params.hpp"
#include "mvmae/rng.hpp"

namespace mvmae::text {

struct TextDecoderConfig {
    std::size_t layers = 1;
    std::size_t heads = 2;
    std::size_t dim = 32;
    std::size_t max_len = 16;
    std::size_t vocab_size = 0;

    void validate() const;
};

// Registers "txt.*": token embedding, learned positions, decoder blocks
// cross-attending into `memory_dim`-wide encodings, final norm and head.
void init_text_decoder(model::ParameterStore& store, const TextDecoderConfig& cfg,
                       std::size_t memory_dim, Rng& rng, double stddev);

// Logits (prefix.size() x vocab_size). Row k depends on prefix[0..k] only.
ad::Var decode_logits(model::Binding& p, const TextDecoderConfig& cfg,
                      std::span<const std::size_t> prefix, const ad::Var& memory);

// Teacher-forcing input for target r_1..r_K: [pad, r_1, ..., r_{K-1}].
std::vector<std::size_t> shifted_prefix(std::span<const std::size_t> target);

// Mean over the K positions of -log softmax(logits_k)[target_k].
ad::Var sequence_ce(const ad::Var& logits, std::span<const std::size_t> target);

// (1/|V|)(1/K) sum_v sum_k ce: the same report predicted from every view.
ad::Var loss_ce(model::Binding& p, const TextDecoderConfig& cfg, std::span<const ad::Var> encodings,
                std::span<const std::size_t> report);

}  // namespace mvmae::text
