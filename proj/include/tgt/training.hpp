#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tgt/model.hpp"

namespace tgt {

// score = z^T (h ∘ e) for two [1 x dim] rows.
Tensor score_pair(const Tensor& subuser_row, const Tensor& item_row,
                  const Tensor& score_weight);

// One optimizable graph: hinge terms max(0, 1 - pos + neg) over every
// (instance, negative) pair, plus λ‖Θ‖² over all parameters. An empty batch
// yields just the regularizer. The graph must cover every instance user.
Tensor batch_loss(const Model& model, const BatchGraph& g,
                  const TimeSlotMapper& tm,
                  const std::vector<TrainingInstance>& batch, double lambda);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are laid out parallel to the
// model's parameter list and exposed for checkpointing.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    // Applies one update from the accumulated gradients, then zeroes them.
    // Parameters without gradients are left alone. NumericError on a
    // non-finite gradient, named after the offending parameter.
    void step(std::vector<std::pair<std::string, Tensor>>& params, double lr);

    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return steps_; }
    void set_step_count(std::int64_t s) { steps_ = s; }
    // Sized on first use; checkpoint loading sizes them explicitly.
    void ensure_buffers(
        const std::vector<std::pair<std::string, Tensor>>& params);
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<std::vector<double>>& first_moments() const {
        return m_;
    }
    const std::vector<std::vector<double>>& second_moments() const {
        return v_;
    }

private:
    AdamConfig cfg_;
    std::int64_t steps_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainOptions {
    int epochs = 20;
    int start_epoch = 0;  // resumed runs continue from here
    int batch_size = 256;
    int negatives = 1;
    double lr = 1e-3;
    double decay = 0.96;
    double lambda = 0.005;
    bool fresh_negatives = true;
    bool batch_scope = false;  // propagate over batch users only
};

// Runs epochs start_epoch..epochs-1. Every random choice is keyed on the
// master seed and the epoch number, never on call history, so a resumed run
// retraces an uninterrupted one exactly. Returns the per-epoch losses;
// `per_epoch` fires after each epoch with the same values.
std::vector<double> train_model(
    Model& model, PreparedData& pd, const TimeSlotMapper& tm,
    const TrainOptions& opt, const Rng& master, Adam& adam,
    const std::function<void(int, double)>& per_epoch = {});

}  // namespace tgt
