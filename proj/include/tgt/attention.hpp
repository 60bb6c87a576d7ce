#pragma once

#include <vector>

#include "tgt/tensor.hpp"

namespace tgt {

// Per-head projections for the sub-sequence encoder. Each of the three
// lists holds one [dim/heads x dim] matrix per head.
struct AttentionParams {
    std::vector<Tensor> query;
    std::vector<Tensor> key;
    std::vector<Tensor> value;
};

// Transposed projections, built once per forward pass so every
// sub-sequence in that pass shares the same transpose nodes.
struct PreparedAttention {
    std::vector<Tensor> query_t;  // [dim x dim/heads]
    std::vector<Tensor> key_t;
    std::vector<Tensor> value_t;
    int dim = 0;
    int head_dim = 0;
};

PreparedAttention prepare_attention(const AttentionParams& params);

// Encodes one sub-sequence bidirectionally: every position attends to every
// position, scores scaled by sqrt(dim/heads), heads concatenated back to
// [len x dim]. If valid < len, columns past valid are masked with -inf and
// get weight exactly 0; rows past valid are padding whose output the caller
// ignores. attention_out, when given, receives each head's weight matrix.
Tensor encode_subsequence(const Tensor& inputs, const PreparedAttention& prep,
                          int valid = -1,
                          std::vector<Tensor>* attention_out = nullptr);

}  // namespace tgt
