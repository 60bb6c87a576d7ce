#include "tgt/attention.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tgt/errors.hpp"

namespace tgt {

PreparedAttention prepare_attention(const AttentionParams& params) {
    if (params.query.empty() || params.query.size() != params.key.size() ||
        params.query.size() != params.value.size())
        throw ShapeError("attention: query/key/value head counts differ");
    PreparedAttention prep;
    prep.head_dim = params.query.front().dim(0);
    prep.dim = params.query.front().dim(1);
    for (std::size_t h = 0; h < params.query.size(); ++h) {
        for (const auto* t : {&params.query[h], &params.key[h],
                              &params.value[h]}) {
            if (t->rank() != 2 || t->dim(0) != prep.head_dim ||
                t->dim(1) != prep.dim)
                throw ShapeError("attention: head " + std::to_string(h) +
                                 " has shape " + shape_string(t->shape()) +
                                 ", expected [" +
                                 std::to_string(prep.head_dim) + " x " +
                                 std::to_string(prep.dim) + "]");
        }
        prep.query_t.push_back(transpose(params.query[h]));
        prep.key_t.push_back(transpose(params.key[h]));
        prep.value_t.push_back(transpose(params.value[h]));
    }
    return prep;
}

Tensor encode_subsequence(const Tensor& inputs, const PreparedAttention& prep,
                          int valid, std::vector<Tensor>* attention_out) {
    if (!inputs.defined() || inputs.rank() != 2)
        throw ShapeError("encode_subsequence: inputs must be [len x dim]");
    const int len = inputs.dim(0);
    if (inputs.dim(1) != prep.dim)
        throw ShapeError("encode_subsequence: input width " +
                         std::to_string(inputs.dim(1)) +
                         " does not match head width " +
                         std::to_string(prep.dim));
    if (valid == -1) valid = len;
    if (valid < 1 || valid > len)
        throw ShapeError("encode_subsequence: valid count " +
                         std::to_string(valid) + " out of range for length " +
                         std::to_string(len));

    Tensor mask;
    if (valid < len) {
        const double ninf = -std::numeric_limits<double>::infinity();
        std::vector<double> m(static_cast<std::size_t>(len) * len, 0.0);
        for (int r = 0; r < len; ++r)
            for (int c = valid; c < len; ++c)
                m[static_cast<std::size_t>(r) * len + c] = ninf;
        mask = Tensor::from({len, len}, std::move(m));
    }

    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(prep.head_dim));
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(prep.query_t.size());
    for (std::size_t h = 0; h < prep.query_t.size(); ++h) {
        Tensor q = matmul(inputs, prep.query_t[h]);  // [len x head_dim]
        Tensor k = matmul(inputs, prep.key_t[h]);
        Tensor v = matmul(inputs, prep.value_t[h]);
        Tensor logits = scale(matmul(q, transpose(k)), inv_scale);
        if (mask.defined()) logits = add(logits, mask);
        Tensor alpha = softmax(logits, 1);
        if (attention_out) attention_out->push_back(alpha);
        head_outputs.push_back(matmul(alpha, v));
    }
    return head_outputs.size() == 1 ? head_outputs.front()
                                    : concat(head_outputs, 1);
}

}  // namespace tgt
