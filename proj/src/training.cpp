#include "tgt/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tgt/errors.hpp"

namespace tgt {

Tensor score_pair(const Tensor& subuser_row, const Tensor& item_row,
                  const Tensor& score_weight) {
    return matmul(mul(subuser_row, item_row), score_weight);  // [1 x 1]
}

void Adam::ensure_buffers(
    const std::vector<std::pair<std::string, Tensor>>& params) {
    if (m_.size() == params.size()) return;
    m_.clear();
    v_.clear();
    for (const auto& [name, t] : params) {
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
    }
}

void Adam::step(std::vector<std::pair<std::string, Tensor>>& params,
                double lr) {
    ensure_buffers(params);
    ++steps_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& [name, t] = params[pi];
        if (!t.has_grad()) continue;
        auto& g = t.grad();
        auto& vals = t.values();
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("non-finite gradient in parameter '" +
                                   name + "'");
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            vals[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        t.zero_grad();
    }
}

namespace {

Tensor regularizer(const std::vector<std::pair<std::string, Tensor>>& params,
                   double lambda) {
    Tensor total;
    for (const auto& [name, t] : params) {
        Tensor sq = sum_all(mul(t, t));
        total = total.defined() ? add(total, sq) : sq;
    }
    return scale(total, lambda);
}

}  // namespace

Tensor batch_loss(const Model& model, const BatchGraph& g,
                  const TimeSlotMapper& tm,
                  const std::vector<TrainingInstance>& batch, double lambda) {
    Tensor reg = regularizer(model.parameters(), lambda);
    if (batch.empty()) return reg;
    ForwardResult fr = model.forward(g, tm);
    std::vector<Tensor> terms;
    for (const TrainingInstance& inst : batch) {
        Tensor h = gather_rows(fr.subusers, {g.slot_for(inst.subseq)});
        Tensor pos = score_pair(h, gather_rows(fr.items, {inst.positive}),
                                model.score_weight());
        for (int neg_item : inst.negatives) {
            Tensor neg = score_pair(h, gather_rows(fr.items, {neg_item}),
                                    model.score_weight());
            terms.push_back(relu(affine(sub(neg, pos), 1.0, 1.0)));
        }
    }
    if (terms.empty()) return reg;
    return add(sum_all(concat(terms, 0)), reg);
}

std::vector<double> train_model(
    Model& model, PreparedData& pd, const TimeSlotMapper& tm,
    const TrainOptions& opt, const Rng& master, Adam& adam,
    const std::function<void(int, double)>& per_epoch) {
    auto& params = model.parameters();
    adam.ensure_buffers(params);

    BatchGraph full_graph;
    if (!opt.batch_scope) full_graph = build_graph(pd);

    std::vector<double> losses;
    for (int epoch = opt.start_epoch; epoch < opt.epochs; ++epoch) {
        // Negatives are keyed to the epoch; a frozen set reuses epoch 0.
        fill_negatives(pd, opt.negatives,
                       master.fork("negatives",
                                   opt.fresh_negatives
                                       ? static_cast<std::uint64_t>(epoch)
                                       : 0));
        std::vector<int> order(pd.instances.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng =
            master.fork("batch-order", static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        const double lr =
            opt.lr * std::pow(opt.decay, static_cast<double>(epoch));
        double epoch_loss = 0.0;

        const std::size_t batch =
            static_cast<std::size_t>(std::max(1, opt.batch_size));
        // An empty instance list still takes one regularizer-only step.
        const std::size_t steps =
            order.empty() ? 1 : (order.size() + batch - 1) / batch;
        for (std::size_t s = 0; s < steps; ++s) {
            const std::size_t from = s * batch;
            const std::size_t to = std::min(order.size(), from + batch);

            std::vector<TrainingInstance> chunk;
            std::vector<int> scope_users;
            for (std::size_t k = from; k < to; ++k) {
                chunk.push_back(
                    pd.instances[static_cast<std::size_t>(order[k])]);
                scope_users.push_back(chunk.back().user);
            }
            BatchGraph scoped;
            if (opt.batch_scope && !chunk.empty())
                scoped = build_graph(pd, scope_users);
            const BatchGraph& g = opt.batch_scope ? scoped : full_graph;
            Tensor loss = batch_loss(model, g, tm, chunk, opt.lambda);

            const double value = loss.scalar_value();
            if (!std::isfinite(value))
                throw NumericError("training loss became non-finite at epoch " +
                                   std::to_string(epoch));
            for (auto& [name, t] : params) t.zero_grad();
            backward(loss);
            adam.step(params, lr);
            release_graph(loss);
            epoch_loss += value;
        }
        losses.push_back(epoch_loss);
        if (per_epoch) per_epoch(epoch, epoch_loss);
    }
    return losses;
}

}  // namespace tgt
