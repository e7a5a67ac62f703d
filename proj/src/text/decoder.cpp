#include "mvmae/text/decoder.hpp"

#include <string>
#include <vector>

#include "mvmae/autodiff/ops.hpp"
#include "mvmae/errors.hpp"
#include "mvmae/model/transformer.hpp"
#include "mvmae/text/vocabulary.hpp"

namespace mvmae::text {

using ad::Var;

void TextDecoderConfig::validate() const {
    if (max_len < 2) throw ValidationError("text max_len must be at least 2");
    if (layers == 0 || heads == 0 || dim == 0 || dim % heads != 0) {
        throw ValidationError("text decoder dims must be positive and dim divisible by heads");
    }
    if (vocab_size <= kReservedCount) throw ValidationError("text vocabulary has no ordinary tokens");
}

void init_text_decoder(model::ParameterStore& store, const TextDecoderConfig& cfg,
                       std::size_t memory_dim, Rng& rng, double stddev) {
    cfg.validate();
    store.add("txt.embed", model::truncated_normal({cfg.vocab_size, cfg.dim}, rng, stddev), false);
    store.add("txt.pos", model::truncated_normal({cfg.max_len, cfg.dim}, rng, stddev), false);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        model::add_decoder_block(store, "txt.blocks." + std::to_string(l), cfg.dim, memory_dim, rng);
    }
    model::add_layer_norm(store, "txt.norm", cfg.dim);
    model::add_linear(store, "txt.head", cfg.dim, cfg.vocab_size, rng);
}

Var decode_logits(model::Binding& p, const TextDecoderConfig& cfg, std::span<const std::size_t> prefix,
                  const Var& memory) {
    if (prefix.empty() || prefix.size() > cfg.max_len) {
        throw ValidationError("text prefix length " + std::to_string(prefix.size()) +
                              " outside [1, " + std::to_string(cfg.max_len) + "]");
    }
    for (auto id : prefix) {
        if (id >= cfg.vocab_size) throw ValidationError("token id " + std::to_string(id) + " out of range");
    }
    std::vector<std::size_t> positions(prefix.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    Var x = ad::add(ad::gather_rows(p("txt.embed"), prefix), ad::gather_rows(p("txt.pos"), positions));
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        x = model::decoder_block(p, "txt.blocks." + std::to_string(l), x, memory, cfg.heads);
    }
    return model::linear(p, "txt.head", model::layer_norm_affine(p, "txt.norm", x));
}

std::vector<std::size_t> shifted_prefix(std::span<const std::size_t> target) {
    std::vector<std::size_t> prefix{kPadId};
    if (!target.empty()) prefix.insert(prefix.end(), target.begin(), target.end() - 1);
    return prefix;
}

Var sequence_ce(const Var& logits, std::span<const std::size_t> target) {
    if (logits.shape().size() != 2 || logits.dim(0) != target.size()) {
        throw ShapeError("sequence_ce: logits " + shape_str(logits.shape()) + " vs " +
                         std::to_string(target.size()) + " targets");
    }
    const std::size_t k = target.size(), w = logits.dim(1);
    Tensor onehot({k, w}, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (target[i] >= w) throw ValidationError("target id out of range");
        onehot.at(i, target[i]) = 1.0;
    }
    const Var picked = ad::sum(ad::mul(ad::log_softmax(logits), Var::constant(std::move(onehot))));
    return ad::scale(picked, -1.0 / static_cast<double>(k));
}

Var loss_ce(model::Binding& p, const TextDecoderConfig& cfg, std::span<const Var> encodings,
            std::span<const std::size_t> report) {
    if (report.empty()) throw ValidationError("loss_ce: empty report");
    if (encodings.empty()) throw ValidationError("loss_ce: no views");
    const auto prefix = shifted_prefix(report);
    Var total;
    for (const auto& z : encodings) {
        const Var term = sequence_ce(decode_logits(p, cfg, prefix, z), report);
        total = total.defined() ? ad::add(total, term) : term;
    }
    return ad::scale(total, 1.0 / static_cast<double>(encodings.size()));
}

}  // namespace mvmae::text
