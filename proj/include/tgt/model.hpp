#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tgt/attention.hpp"
#include "tgt/config.hpp"
#include "tgt/propagation.hpp"
#include "tgt/rng.hpp"
#include "tgt/temporal.hpp"
#include "tgt/tensor.hpp"

namespace tgt {

struct ModelConfig {
    int dim = 16;
    int layers = 2;
    int heads = 2;
    int channels = 2;
    int window = 6;
    bool eta_softmax = true;   // softmax the user aggregation weights
    bool refine_fresh = true;  // refinement reads the just-updated user state
    bool mean_pool = false;    // average instead of sum when pooling

    // Ablation switches.
    bool context_off = false;      // positions replace behavior+time inputs
    bool sequence_off = false;     // skip the attention encoder
    bool multichannel_off = false; // one shared transform for all behaviors
    bool global_off = false;       // no user aggregation or refinement
    bool concat_agg = false;       // concat + projection across behaviors
    bool frequency_agg = false;    // frequency weights across behaviors
};

ModelConfig model_config_from(const RunConfig& rc);

struct ForwardResult {
    Tensor users;     // [scope users x dim], layers summed
    Tensor subusers;  // [slots x dim]
    Tensor items;     // [item count x dim]
    // Final-layer diagnostics, plain values. gamma: per slot, one weight per
    // behavior (zero where the behavior is absent; zeros everywhere under
    // concat aggregation, which has no per-behavior weights). eta: per scope
    // user, one weight per sub-sequence.
    std::vector<std::vector<double>> gamma;
    std::vector<std::vector<double>> eta;
};

class Model {
public:
    Model(ModelConfig cfg, int users, int items, int behaviors, Rng rng);

    const ModelConfig& config() const { return cfg_; }
    int user_count() const { return users_; }
    int item_count() const { return items_; }
    int behavior_count() const { return behaviors_; }

    // Stable name -> tensor list; order never depends on configuration.
    std::vector<std::pair<std::string, Tensor>>& parameters() {
        return params_;
    }
    const std::vector<std::pair<std::string, Tensor>>& parameters() const {
        return params_;
    }
    Tensor param(const std::string& name) const;

    // Builds the full computation over the graph. softmax_sink, when given,
    // collects every softmax output produced anywhere in the pass.
    ForwardResult forward(const BatchGraph& g, const TimeSlotMapper& tm,
                          std::vector<Tensor>* softmax_sink = nullptr) const;

private:
    Tensor add_param(const std::string& name, int rows, int cols, Rng& rng);

    ModelConfig cfg_;
    int users_ = 0, items_ = 0, behaviors_ = 0;
    std::vector<std::pair<std::string, Tensor>> params_;

    Tensor user_table_, item_table_, behavior_table_, position_table_;
    Tensor time_projection_;
    AttentionParams attention_;
    ChannelParams channel_;
    Tensor shared_transform_;
    CrossTypeParams cross_;
    Tensor concat_projection_;
    Tensor score_weight_;

public:
    const Tensor& score_weight() const { return score_weight_; }
};

}  // namespace tgt
