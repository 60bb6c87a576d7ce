#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tgt/data.hpp"
#include "tgt/tensor.hpp"

namespace tgt {

// The message-passing structure over a set of users: their sub-sequences
// ("slots", ordered by global sub-sequence id) and the item -> slot edges
// induced by the events inside them. Every event is one edge, so an item
// touched twice in a window contributes that slot twice.
struct BatchGraph {
    std::vector<int> users;                   // dense user ids, ascending
    std::vector<const SubSequence*> subseqs;  // per slot
    std::vector<int> user_of_slot;            // per slot: index into `users`
    std::vector<std::vector<int>> user_slots; // per user: slots, chronological
    // per item: (slot, behavior) pairs, slot-major order
    std::vector<std::vector<std::pair<int, int>>> item_edges;
    std::vector<int> slot_of_subseq;  // global sub-sequence id -> slot or -1
    int behavior_count = 0;
    int item_count = 0;

    int slot_count() const { return static_cast<int>(subseqs.size()); }
    int slot_for(int subseq_id) const;  // DataError when out of scope
};

// Scope of all users with at least one sub-sequence, or a subset of them.
BatchGraph build_graph(const PreparedData& pd);
BatchGraph build_graph(const PreparedData& pd,
                       const std::vector<int>& scope_users);

// Sums (or averages) the rows of `encoded` [len x dim] that share a
// behavior. Returns one [1 x dim] row per behavior present, ascending.
struct PooledByBehavior {
    std::vector<int> behaviors;
    std::vector<Tensor> rows;
};
PooledByBehavior pool_by_behavior(const Tensor& encoded,
                                  const std::vector<int>& behaviors,
                                  bool mean);

// Behavior-specific transform composed from shared channel bases:
// gate scores = gate_weight * embed^T + gate_bias, softmaxed over channels,
// then W = sum_c gate_c * base_c reshaped to [dim x dim].
struct ChannelParams {
    Tensor bases;        // [channels x dim*dim]
    Tensor gate_weight;  // [channels x dim]
    Tensor gate_bias;    // [channels x 1]
};
Tensor behavior_transform(const Tensor& behavior_embed_row,
                          const ChannelParams& cp, int dim,
                          Tensor* gate_out = nullptr);

// Attention over the rows of `stack` [n x dim]: the query is a transform of
// their sum, scores are dot products, weights a softmax over the rows.
struct CrossTypeParams {
    Tensor weight;  // [dim x dim]
    Tensor bias;    // [1 x dim]
};
struct CrossTypeResult {
    Tensor combined;  // [1 x dim]
    Tensor weights;   // [n x 1]
};
CrossTypeResult cross_type_attention(const Tensor& stack,
                                     const CrossTypeParams& p);

// User state from its sub-sequence rows `xs` [n x dim]: scores against the
// previous user state, optionally softmaxed, then a ReLU of the weighted sum.
struct UserAggResult {
    Tensor user;     // [1 x d]
    Tensor weights;  // [n x 1]
};
UserAggResult aggregate_user(const Tensor& xs, const Tensor& prev_user_row,
                             bool softmax_weights);

// Elementwise sum across layers of equally shaped stacks.
Tensor combine_layers(const std::vector<Tensor>& layers);

// [1 x n] constant of ones; [1 x n] constant of counts normalized to ratios.
Tensor ones_row(int n);
Tensor ratio_row(const std::vector<int>& counts);

}  // namespace tgt
