#include "mvmae/model/transformer.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mvmae/autodiff/ops.hpp"
#include "mvmae/errors.hpp"

namespace mvmae::model {

using ad::Var;

void add_attention(ParameterStore& store, const std::string& prefix, std::size_t query_dim,
                   std::size_t memory_dim, std::size_t dim, Rng& rng) {
    add_linear(store, prefix + ".q", query_dim, dim, rng);
    add_linear(store, prefix + ".k", memory_dim, dim, rng);
    add_linear(store, prefix + ".v", memory_dim, dim, rng);
    add_linear(store, prefix + ".o", dim, query_dim, rng);
}

Var attention(Binding& p, const std::string& prefix, const Var& query, const Var& memory,
              std::size_t heads, bool causal) {
    const Var q = linear(p, prefix + ".q", query);
    const Var k = linear(p, prefix + ".k", memory);
    const Var v = linear(p, prefix + ".v", memory);
    const std::size_t dim = q.dim(1);
    if (heads == 0 || dim % heads != 0) {
        throw ShapeError("attention: width " + std::to_string(dim) + " not divisible into " +
                         std::to_string(heads) + " heads");
    }
    const std::size_t nq = q.dim(0), nk = k.dim(0);
    Var mask;
    if (causal) {
        if (nq != nk) throw ShapeError("causal attention needs equal query/memory lengths");
        // exp() of this offset underflows to exactly 0, so future positions get
        // no weight and no gradient.
        Tensor m({nq, nk}, 0.0);
        for (std::size_t i = 0; i < nq; ++i) {
            for (std::size_t j = i + 1; j < nk; ++j) m.at(i, j) = -1e30;
        }
        mask = Var::constant(std::move(m));
    }
    const std::size_t hd = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<Var> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Var qh = heads == 1 ? q : ad::slice(q, 1, h * hd, (h + 1) * hd);
        const Var kh = heads == 1 ? k : ad::slice(k, 1, h * hd, (h + 1) * hd);
        const Var vh = heads == 1 ? v : ad::slice(v, 1, h * hd, (h + 1) * hd);
        Var scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt);
        if (causal) scores = ad::add(scores, mask);
        outs.push_back(ad::matmul(ad::softmax(scores), vh));
    }
    const Var merged = heads == 1 ? outs[0] : ad::concat(outs, 1);
    return linear(p, prefix + ".o", merged);
}

namespace {

void add_mlp(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng) {
    add_linear(store, prefix + ".fc1", dim, 4 * dim, rng);
    add_linear(store, prefix + ".fc2", 4 * dim, dim, rng);
}

Var mlp(Binding& p, const std::string& prefix, const Var& x) {
    return linear(p, prefix + ".fc2", ad::gelu(linear(p, prefix + ".fc1", x)));
}

}  // namespace

void add_encoder_block(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng) {
    add_layer_norm(store, prefix + ".ln1", dim);
    add_attention(store, prefix + ".attn", dim, dim, dim, rng);
    add_layer_norm(store, prefix + ".ln2", dim);
    add_mlp(store, prefix + ".mlp", dim, rng);
}

Var encoder_block(Binding& p, const std::string& prefix, const Var& x, std::size_t heads) {
    const Var h = layer_norm_affine(p, prefix + ".ln1", x);
    const Var x1 = ad::add(x, attention(p, prefix + ".attn", h, h, heads, false));
    return ad::add(x1, mlp(p, prefix + ".mlp", layer_norm_affine(p, prefix + ".ln2", x1)));
}

void add_decoder_block(ParameterStore& store, const std::string& prefix, std::size_t dim,
                       std::size_t memory_dim, Rng& rng) {
    add_layer_norm(store, prefix + ".ln1", dim);
    add_attention(store, prefix + ".self_attn", dim, dim, dim, rng);
    add_layer_norm(store, prefix + ".ln2", dim);
    add_attention(store, prefix + ".cross_attn", dim, memory_dim, dim, rng);
    add_layer_norm(store, prefix + ".ln3", dim);
    add_mlp(store, prefix + ".mlp", dim, rng);
}

Var decoder_block(Binding& p, const std::string& prefix, const Var& x, const Var& memory,
                  std::size_t heads) {
    const Var h1 = layer_norm_affine(p, prefix + ".ln1", x);
    const Var x1 = ad::add(x, attention(p, prefix + ".self_attn", h1, h1, heads, true));
    const Var h2 = layer_norm_affine(p, prefix + ".ln2", x1);
    const Var x2 = ad::add(x1, attention(p, prefix + ".cross_attn", h2, memory, heads, false));
    return ad::add(x2, mlp(p, prefix + ".mlp", layer_norm_affine(p, prefix + ".ln3", x2)));
}

Tensor sincos_2d(std::size_t grid, std::size_t dim) {
    if (dim % 4 != 0) throw ValidationError("sincos_2d: dim must be divisible by 4");
    const std::size_t quarter = dim / 4;
    Tensor t({grid * grid, dim});
    for (std::size_t r = 0; r < grid; ++r) {
        for (std::size_t c = 0; c < grid; ++c) {
            const std::size_t row = r * grid + c;
            // First half encodes the column coordinate, second half the row.
            const double coords[2] = {static_cast<double>(c), static_cast<double>(r)};
            for (std::size_t half = 0; half < 2; ++half) {
                for (std::size_t i = 0; i < quarter; ++i) {
                    const double omega =
                        1.0 / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(quarter));
                    const double a = coords[half] * omega;
                    t.at(row, half * 2 * quarter + i) = std::sin(a);
                    t.at(row, half * 2 * quarter + quarter + i) = std::cos(a);
                }
            }
        }
    }
    return t;
}

}  // namespace mvmae::model
