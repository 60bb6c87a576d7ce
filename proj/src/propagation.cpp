#include "tgt/propagation.hpp"

#include <algorithm>
#include <string>

#include "tgt/errors.hpp"

namespace tgt {

int BatchGraph::slot_for(int subseq_id) const {
    if (subseq_id < 0 ||
        subseq_id >= static_cast<int>(slot_of_subseq.size()) ||
        slot_of_subseq[static_cast<std::size_t>(subseq_id)] < 0)
        throw DataError("sub-sequence " + std::to_string(subseq_id) +
                        " is not in the propagation scope");
    return slot_of_subseq[static_cast<std::size_t>(subseq_id)];
}

BatchGraph build_graph(const PreparedData& pd) {
    std::vector<int> all;
    for (int u = 0; u < pd.data.user_count(); ++u)
        if (!pd.user_subseqs[static_cast<std::size_t>(u)].empty())
            all.push_back(u);
    return build_graph(pd, all);
}

BatchGraph build_graph(const PreparedData& pd,
                       const std::vector<int>& scope_users) {
    BatchGraph g;
    g.behavior_count = pd.data.behavior_count();
    g.item_count = pd.data.item_count();
    g.users = scope_users;
    std::sort(g.users.begin(), g.users.end());
    g.users.erase(std::unique(g.users.begin(), g.users.end()), g.users.end());

    g.user_slots.resize(g.users.size());
    g.slot_of_subseq.assign(pd.subsequences.size(), -1);
    for (std::size_t ui = 0; ui < g.users.size(); ++ui) {
        const int u = g.users[ui];
        if (u < 0 || u >= pd.data.user_count())
            throw DataError("user index " + std::to_string(u) +
                            " out of range");
        if (pd.user_subseqs[static_cast<std::size_t>(u)].empty())
            throw DataError("user " + std::to_string(u) +
                            " has no training sub-sequences");
        for (int sid : pd.user_subseqs[static_cast<std::size_t>(u)])
            g.slot_of_subseq[static_cast<std::size_t>(sid)] = 0;  // marked
    }
    // Slots in ascending global id keep the layout stable however the scope
    // was assembled.
    for (std::size_t sid = 0; sid < pd.subsequences.size(); ++sid) {
        if (g.slot_of_subseq[sid] < 0) continue;
        const int slot = g.slot_count();
        g.slot_of_subseq[sid] = slot;
        g.subseqs.push_back(&pd.subsequences[sid]);
    }
    g.user_of_slot.resize(g.subseqs.size());
    for (std::size_t ui = 0; ui < g.users.size(); ++ui) {
        for (int sid : pd.user_subseqs[static_cast<std::size_t>(g.users[ui])]) {
            const int slot = g.slot_of_subseq[static_cast<std::size_t>(sid)];
            g.user_slots[ui].push_back(slot);
            g.user_of_slot[static_cast<std::size_t>(slot)] =
                static_cast<int>(ui);
        }
    }
    g.item_edges.resize(static_cast<std::size_t>(g.item_count));
    for (int slot = 0; slot < g.slot_count(); ++slot)
        for (const auto& r : g.subseqs[static_cast<std::size_t>(slot)]->records)
            g.item_edges[static_cast<std::size_t>(r.item)].push_back(
                {slot, r.behavior});
    return g;
}

PooledByBehavior pool_by_behavior(const Tensor& encoded,
                                  const std::vector<int>& behaviors,
                                  bool mean) {
    if (!encoded.defined() || encoded.rank() != 2)
        throw ShapeError("pool_by_behavior: encoded must be [len x dim]");
    const int len = encoded.dim(0);
    if (static_cast<int>(behaviors.size()) != len)
        throw ShapeError("pool_by_behavior: " +
                         std::to_string(behaviors.size()) +
                         " behaviors for " + std::to_string(len) +
                         " positions");
    int max_b = 0;
    for (int b : behaviors) max_b = std::max(max_b, b);

    PooledByBehavior out;
    for (int b = 0; b <= max_b; ++b) {
        std::vector<double> indicator(static_cast<std::size_t>(len), 0.0);
        int count = 0;
        for (int k = 0; k < len; ++k)
            if (behaviors[static_cast<std::size_t>(k)] == b) {
                indicator[static_cast<std::size_t>(k)] = 1.0;
                ++count;
            }
        if (count == 0) continue;
        if (mean)
            for (auto& v : indicator) v /= count;
        Tensor picker = Tensor::from({1, len}, std::move(indicator));
        out.behaviors.push_back(b);
        out.rows.push_back(matmul(picker, encoded));
    }
    return out;
}

Tensor behavior_transform(const Tensor& behavior_embed_row,
                          const ChannelParams& cp, int dim,
                          Tensor* gate_out) {
    if (!behavior_embed_row.defined() || behavior_embed_row.rank() != 2 ||
        behavior_embed_row.dim(0) != 1)
        throw ShapeError("behavior_transform: embedding must be [1 x dim]");
    if (cp.bases.dim(1) != dim * dim)
        throw ShapeError("behavior_transform: bases are " +
                         shape_string(cp.bases.shape()) + ", expected [C x " +
                         std::to_string(dim * dim) + "]");
    // [C x 1] scores -> softmax over channels
    Tensor scores = add(matmul(cp.gate_weight, transpose(behavior_embed_row)),
                        cp.gate_bias);
    Tensor gate = softmax(scores, 0);
    if (gate_out) *gate_out = gate;
    Tensor flat = matmul(transpose(gate), cp.bases);  // [1 x dim*dim]
    return reshape(flat, {dim, dim});
}

CrossTypeResult cross_type_attention(const Tensor& stack,
                                     const CrossTypeParams& p) {
    if (!stack.defined() || stack.rank() != 2)
        throw ShapeError("cross_type_attention: stack must be [n x dim]");
    const int n = stack.dim(0);
    Tensor summed = matmul(ones_row(n), stack);  // [1 x dim]
    Tensor query = relu(add(matmul(summed, p.weight), p.bias));
    Tensor scores = matmul(stack, transpose(query));  // [n x 1]
    CrossTypeResult out;
    out.weights = softmax(scores, 0);
    out.combined = matmul(transpose(out.weights), stack);
    return out;
}

UserAggResult aggregate_user(const Tensor& xs, const Tensor& prev_user_row,
                             bool softmax_weights) {
    if (!xs.defined() || xs.rank() != 2)
        throw ShapeError("aggregate_user: xs must be [n x dim]");
    if (!prev_user_row.defined() || prev_user_row.rank() != 2 ||
        prev_user_row.dim(0) != 1 || prev_user_row.dim(1) != xs.dim(1))
        throw ShapeError("aggregate_user: previous state must be [1 x dim]");
    Tensor scores = matmul(xs, transpose(prev_user_row));  // [n x 1]
    UserAggResult out;
    out.weights = softmax_weights ? softmax(scores, 0) : scores;
    out.user = relu(matmul(transpose(out.weights), xs));
    return out;
}

Tensor combine_layers(const std::vector<Tensor>& layers) {
    if (layers.empty()) throw ShapeError("combine_layers: no layers");
    Tensor out = layers.front();
    for (std::size_t i = 1; i < layers.size(); ++i)
        out = add(out, layers[i]);
    return out;
}

Tensor ones_row(int n) {
    return Tensor::from({1, n}, std::vector<double>(static_cast<std::size_t>(n),
                                                    1.0));
}

Tensor ratio_row(const std::vector<int>& counts) {
    if (counts.empty()) throw ShapeError("ratio_row: no counts");
    double total = 0.0;
    for (int c : counts) total += c;
    if (total <= 0.0) throw ShapeError("ratio_row: counts sum to zero");
    std::vector<double> v;
    v.reserve(counts.size());
    for (int c : counts) v.push_back(static_cast<double>(c) / total);
    return Tensor::from({1, static_cast<int>(counts.size())}, std::move(v));
}

}  // namespace tgt
