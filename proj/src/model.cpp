#include "tgt/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tgt/errors.hpp"

namespace tgt {

ModelConfig model_config_from(const RunConfig& rc) {
    ModelConfig mc;
    mc.dim = rc.model_dim;
    mc.layers = rc.model_layers;
    mc.heads = rc.model_heads;
    mc.channels = rc.model_channels;
    mc.window = rc.model_window;
    mc.eta_softmax = rc.model_eta_mode == "softmax";
    mc.refine_fresh = rc.model_refine == "fresh";
    mc.mean_pool = rc.model_mean_aggregation;
    mc.context_off = rc.ab_context_off;
    mc.sequence_off = rc.ab_sequence_off;
    mc.multichannel_off = rc.ab_multichannel_off;
    mc.global_off = rc.ab_global_off;
    mc.concat_agg = rc.ab_concat;
    mc.frequency_agg = rc.ab_frequency;
    return mc;
}

Tensor Model::add_param(const std::string& name, int rows, int cols,
                        Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.dim));
    std::vector<double> v(static_cast<std::size_t>(rows) *
                          static_cast<std::size_t>(cols));
    for (auto& x : v) x = (rng.real() * 2.0 - 1.0) * bound;
    Tensor t = Tensor::from({rows, cols}, std::move(v), true);
    params_.emplace_back(name, t);
    return t;
}

Model::Model(ModelConfig cfg, int users, int items, int behaviors, Rng rng)
    : cfg_(cfg), users_(users), items_(items), behaviors_(behaviors) {
    if (users < 1 || items < 1 || behaviors < 1)
        throw DataError("model needs at least one user, item and behavior");
    if (cfg_.dim < 1 || cfg_.heads < 1 || cfg_.dim % cfg_.heads != 0)
        throw ConfigError("embedding width must be a positive multiple of "
                          "the head count");
    if (cfg_.layers < 1 || cfg_.channels < 1 || cfg_.window < 1)
        throw ConfigError("layers, channels and window must be positive");
    if (cfg_.concat_agg && cfg_.frequency_agg)
        throw ConfigError("concat and frequency aggregation are exclusive");

    const int d = cfg_.dim;
    Rng init = rng.fork("init");
    // Every parameter exists whatever the configuration, so checkpoints stay
    // layout-compatible across ablations and the regularizer sees one fixed
    // set.
    user_table_ = add_param("user_embeddings", users, d, init);
    item_table_ = add_param("item_embeddings", items, d, init);
    behavior_table_ = add_param("behavior_embeddings", behaviors, d, init);
    position_table_ = add_param("position_embeddings", cfg_.window, d, init);
    time_projection_ = add_param("time_projection", 2 * d, d, init);
    for (int h = 0; h < cfg_.heads; ++h) {
        const std::string tag = std::to_string(h);
        attention_.query.push_back(
            add_param("attention.query." + tag, d / cfg_.heads, d, init));
        attention_.key.push_back(
            add_param("attention.key." + tag, d / cfg_.heads, d, init));
        attention_.value.push_back(
            add_param("attention.value." + tag, d / cfg_.heads, d, init));
    }
    channel_.bases = add_param("channel_bases", cfg_.channels, d * d, init);
    channel_.gate_weight = add_param("channel_gate_weight", cfg_.channels, d,
                                     init);
    channel_.gate_bias = add_param("channel_gate_bias", cfg_.channels, 1,
                                   init);
    shared_transform_ = add_param("shared_transform", d, d, init);
    cross_.weight = add_param("cross_weight", d, d, init);
    cross_.bias = add_param("cross_bias", 1, d, init);
    concat_projection_ = add_param("concat_projection", behaviors * d, d,
                                   init);
    score_weight_ = add_param("score_weight", d, 1, init);
}

Tensor Model::param(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    throw ConfigError("no parameter named '" + name + "'");
}

ForwardResult Model::forward(const BatchGraph& g, const TimeSlotMapper& tm,
                             std::vector<Tensor>* sink) const {
    const int d = cfg_.dim;
    const int B = behaviors_;
    const int R = g.slot_count();
    if (R == 0) throw DataError("forward: the graph has no sub-sequences");
    if (g.item_count != items_ || g.behavior_count != B)
        throw DataError("forward: graph was built for a different catalog");

    // Behavior transforms, shared between the sub-user and item passes.
    std::vector<Tensor> transforms(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        if (cfg_.multichannel_off) {
            transforms[static_cast<std::size_t>(b)] = shared_transform_;
        } else {
            Tensor row = gather_rows(behavior_table_, {b});
            Tensor gate;
            transforms[static_cast<std::size_t>(b)] =
                behavior_transform(row, channel_, d, &gate);
            if (sink) sink->push_back(gate);
        }
    }

    PreparedAttention prep;
    if (!cfg_.sequence_off) prep = prepare_attention(attention_);

    Tensor zero_row = Tensor::zeros({1, d});

    // Combination of per-behavior rows into one, by attention, frequency or
    // concat+projection. `counts` are event counts per present behavior.
    auto combine_rows = [&](const std::vector<Tensor>& hs,
                            const std::vector<int>& present,
                            const std::vector<int>& counts,
                            std::vector<double>* gamma_row) -> Tensor {
        if (cfg_.concat_agg) {
            std::vector<Tensor> parts(static_cast<std::size_t>(B), zero_row);
            for (std::size_t i = 0; i < hs.size(); ++i)
                parts[static_cast<std::size_t>(present[i])] = hs[i];
            return matmul(concat(parts, 1), concat_projection_);
        }
        Tensor stack = hs.size() == 1 ? hs.front() : concat(hs, 0);
        if (cfg_.frequency_agg) {
            Tensor w = ratio_row(counts);
            if (gamma_row)
                for (std::size_t i = 0; i < present.size(); ++i)
                    (*gamma_row)[static_cast<std::size_t>(present[i])] =
                        w.values()[i];
            return matmul(w, stack);
        }
        auto res = cross_type_attention(stack, cross_);
        if (sink) sink->push_back(res.weights);
        if (gamma_row)
            for (std::size_t i = 0; i < present.size(); ++i)
                (*gamma_row)[static_cast<std::size_t>(present[i])] =
                    res.weights.values()[i];
        return res.combined;
    };

    // Per-slot context encodings and the stack of sub-sequence time rows.
    std::vector<Tensor> encoded(static_cast<std::size_t>(R));
    std::vector<std::vector<int>> slot_items(static_cast<std::size_t>(R));
    std::vector<std::vector<int>> slot_behaviors(static_cast<std::size_t>(R));
    std::vector<std::int64_t> last_slots(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        const SubSequence& s = *g.subseqs[static_cast<std::size_t>(r)];
        const int len = static_cast<int>(s.records.size());
        auto& items = slot_items[static_cast<std::size_t>(r)];
        auto& behs = slot_behaviors[static_cast<std::size_t>(r)];
        std::vector<std::int64_t> code_slots;
        items.reserve(static_cast<std::size_t>(len));
        behs.reserve(static_cast<std::size_t>(len));
        code_slots.reserve(static_cast<std::size_t>(len));
        for (const auto& rec : s.records) {
            items.push_back(rec.item);
            behs.push_back(rec.behavior);
            code_slots.push_back(tm.slot(rec.timestamp));
        }
        Tensor e_items = gather_rows(item_table_, items);
        Tensor inputs;
        if (cfg_.context_off) {
            std::vector<int> pos(static_cast<std::size_t>(len));
            std::iota(pos.begin(), pos.end(), 0);
            inputs = add(e_items, gather_rows(position_table_, pos));
        } else {
            Tensor e_beh = gather_rows(behavior_table_, behs);
            Tensor e_time =
                matmul(time_code_matrix(code_slots, d), time_projection_);
            inputs = add(add(e_items, e_beh), e_time);
        }
        if (cfg_.sequence_off) {
            encoded[static_cast<std::size_t>(r)] = inputs;
        } else {
            std::vector<Tensor> alphas;
            encoded[static_cast<std::size_t>(r)] = encode_subsequence(
                inputs, prep, -1, sink ? &alphas : nullptr);
            if (sink)
                for (const auto& a : alphas) sink->push_back(a);
        }
        last_slots[static_cast<std::size_t>(r)] = tm.slot(s.last_timestamp());
    }
    Tensor t_stack =
        matmul(time_code_matrix(last_slots, d), time_projection_);  // [R x d]

    ForwardResult out;
    out.gamma.assign(static_cast<std::size_t>(R),
                     std::vector<double>(static_cast<std::size_t>(B), 0.0));
    out.eta.assign(g.users.size(), {});

    std::vector<Tensor> item_layers{item_table_};
    std::vector<Tensor> user_layers{gather_rows(user_table_, g.users)};
    std::vector<Tensor> subuser_stacks;
    Tensor refined;

    for (int l = 0; l < cfg_.layers; ++l) {
        const bool last_layer = l == cfg_.layers - 1;

        // Sub-user states from their events' current item representations.
        std::vector<Tensor> subuser_rows(static_cast<std::size_t>(R));
        for (int r = 0; r < R; ++r) {
            const auto& behs = slot_behaviors[static_cast<std::size_t>(r)];
            Tensor inputs =
                l == 0 ? encoded[static_cast<std::size_t>(r)]
                       : gather_rows(item_layers.back(),
                                     slot_items[static_cast<std::size_t>(r)]);
            auto pooled = pool_by_behavior(inputs, behs, cfg_.mean_pool);
            std::vector<Tensor> hs;
            std::vector<int> counts;
            hs.reserve(pooled.behaviors.size());
            for (std::size_t i = 0; i < pooled.behaviors.size(); ++i) {
                const int b = pooled.behaviors[i];
                hs.push_back(relu(matmul(pooled.rows[i],
                                         transforms[static_cast<std::size_t>(b)])));
                counts.push_back(static_cast<int>(
                    std::count(behs.begin(), behs.end(), b)));
            }
            subuser_rows[static_cast<std::size_t>(r)] = combine_rows(
                hs, pooled.behaviors, counts,
                last_layer ? &out.gamma[static_cast<std::size_t>(r)]
                           : nullptr);
        }
        Tensor subuser_stack = concat(subuser_rows, 0);  // [R x d]
        subuser_stacks.push_back(subuser_stack);

        // User aggregation and sub-user refinement.
        if (cfg_.global_off) {
            refined = subuser_stack;
        } else {
            std::vector<Tensor> next_rows(g.users.size());
            for (std::size_t ui = 0; ui < g.users.size(); ++ui) {
                const auto& slots = g.user_slots[ui];
                Tensor xs = add(gather_rows(subuser_stack, slots),
                                gather_rows(t_stack, slots));
                Tensor prev =
                    gather_rows(user_layers.back(), {static_cast<int>(ui)});
                auto res = aggregate_user(xs, prev, cfg_.eta_softmax);
                if (sink && cfg_.eta_softmax) sink->push_back(res.weights);
                if (last_layer) out.eta[ui] = res.weights.values();
                next_rows[ui] = res.user;
            }
            Tensor user_next = concat(next_rows, 0);
            const Tensor& gamma_src =
                cfg_.refine_fresh ? user_next : user_layers.back();
            refined = add(gather_rows(gamma_src, g.user_of_slot), t_stack);
            user_layers.push_back(user_next);
        }

        // Item states from the refined sub-user states along their edges.
        std::vector<Tensor> item_rows(static_cast<std::size_t>(items_));
        for (int j = 0; j < items_; ++j) {
            const auto& edges = g.item_edges[static_cast<std::size_t>(j)];
            if (edges.empty()) {
                item_rows[static_cast<std::size_t>(j)] =
                    gather_rows(item_layers.back(), {j});
                continue;
            }
            std::map<int, std::vector<int>> by_behavior;
            for (const auto& [slot, b] : edges) by_behavior[b].push_back(slot);
            std::vector<Tensor> hs;
            std::vector<int> present, counts;
            for (const auto& [b, slots] : by_behavior) {
                Tensor rows = gather_rows(refined, slots);
                const int n = static_cast<int>(slots.size());
                Tensor pooled =
                    cfg_.mean_pool
                        ? matmul(ratio_row(std::vector<int>(
                                     static_cast<std::size_t>(n), 1)),
                                 rows)
                        : matmul(ones_row(n), rows);
                hs.push_back(relu(matmul(
                    pooled, transforms[static_cast<std::size_t>(b)])));
                present.push_back(b);
                counts.push_back(n);
            }
            item_rows[static_cast<std::size_t>(j)] =
                combine_rows(hs, present, counts, nullptr);
        }
        item_layers.push_back(concat(item_rows, 0));
    }
    if (!cfg_.global_off) subuser_stacks.push_back(refined);

    out.users = combine_layers(user_layers);
    out.subusers = combine_layers(subuser_stacks);
    out.items = combine_layers(item_layers);
    return out;
}

}  // namespace tgt
