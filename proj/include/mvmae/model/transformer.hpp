#pragma once

#include <cstddef>
#include <string>

#include "mvmae/autodiff/var.hpp"
#include "mvmae/model/params.hpp"
#include "mvmae/tensor.hpp"

namespace mvmae::model {

// Registers q/k/v/o projections under `prefix`. Queries come from a
// `query_dim` stream, keys and values from a `memory_dim` stream.
void add_attention(ParameterStore& store, const std::string& prefix, std::size_t query_dim,
                   std::size_t memory_dim, std::size_t dim, Rng& rng);

// Multi-head scaled dot-product attention. With `causal`, query row i only
// sees memory rows j <= i (requires query and memory of equal length).
ad::Var attention(Binding& p, const std::string& prefix, const ad::Var& query,
                  const ad::Var& memory, std::size_t heads, bool causal);

// Pre-norm block: x + MHSA(LN(x)), then + MLP(LN(.)), GELU, expansion 4.
void add_encoder_block(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng);
ad::Var encoder_block(Binding& p, const std::string& prefix, const ad::Var& x, std::size_t heads);

// Pre-norm block with causal self-attention, cross-attention into `memory`,
// and the MLP.
void add_decoder_block(ParameterStore& store, const std::string& prefix, std::size_t dim,
                       std::size_t memory_dim, Rng& rng);
ad::Var decoder_block(Binding& p, const std::string& prefix, const ad::Var& x,
                      const ad::Var& memory, std::size_t heads);

// Fixed 2-D sine-cosine positional table for a grid x grid layout
// (grid*grid rows, dim columns; dim divisible by 4).
Tensor sincos_2d(std::size_t grid, std::size_t dim);

}  // namespace mvmae::model
