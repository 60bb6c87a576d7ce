#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace tgt {

// Every tunable in one place. Field defaults are the program defaults;
// a config file overrides them and command-line flags override the file.
struct RunConfig {
    std::uint64_t seed = 7;

    std::string data_interactions;
    std::string data_vocab;
    std::string data_target = "buy";
    bool data_target_only = false;

    std::int64_t time_granularity = 3600;
    std::optional<std::int64_t> time_origin;  // unset: min train timestamp

    int model_dim = 16;
    int model_layers = 2;
    int model_heads = 2;
    int model_channels = 2;
    int model_window = 6;
    int model_negatives = 1;
    double model_lambda = 0.005;
    std::string model_eta_mode = "softmax";  // softmax | literal
    std::string model_refine = "fresh";      // fresh | literal
    bool model_mean_aggregation = false;

    int train_epochs = 20;
    int train_batch = 256;
    double train_lr = 1e-3;
    double train_decay = 0.96;
    std::string train_scope = "full";  // full | batch
    bool train_fresh_negatives = true;

    std::string eval_cutoffs = "1,5,10";
    int eval_candidates = 99;
    bool eval_full_catalog = false;

    bool ab_context_off = false;
    bool ab_sequence_off = false;
    bool ab_multichannel_off = false;
    bool ab_global_off = false;
    bool ab_concat = false;
    bool ab_frequency = false;

    int synth_users = 1000;
    int synth_items = 500;
    int synth_behaviors = 4;
    int synth_horizon = 220;
    int synth_preferred = 25;
    double synth_context_rate = 0.08;
    double synth_target_rate = 0.01;
    double synth_kappa = 0.5;
    int synth_window = 5;
    std::uint64_t synth_seed = 7;

    int runtime_threads = 0;  // 0: leave the OpenMP default alone
    std::string runtime_kernel_mode = "parallel";  // parallel | serial

    std::string out_dir = "out";
};

struct ConfigKey {
    std::string key;
    std::string type_name;
    std::string default_value;
    std::string description;
};

// The full schema, for help text and option registration.
std::vector<ConfigKey> config_schema();

// Set one key. ConfigError on unknown keys or unparsable values.
void config_set(RunConfig& cfg, const std::string& key,
                const std::string& value);

// `key = value` lines, blank lines and # comments allowed.
void load_config_file(RunConfig& cfg, std::istream& in);

// Cross-field checks (enum values, divisibility, exclusive ablations...).
void validate_config(const RunConfig& cfg);

// "1,5,10" -> {1,5,10}; must be positive and strictly increasing.
std::vector<int> parse_cutoffs(const std::string& spec);

}  // namespace tgt
