#include "tgt/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "tgt/errors.hpp"

namespace tgt {

namespace {

std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r\n");
    if (from == std::string::npos) return "";
    const auto to = s.find_last_not_of(" \t\r\n");
    return s.substr(from, to - from + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const std::string v = trim(value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(key + ": bad value '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    try {
        std::size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": bad value '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": bad value '" + value +
                      "' (want true/false)");
}

struct Entry {
    std::string key;
    std::string type_name;
    std::string description;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string double_str(double d) {
    std::ostringstream os;
    os << d;
    return os.str();
}

#define INT_ENTRY(KEY, FIELD, DESC)                                        \
    Entry{KEY, "int", DESC,                                                \
          [](RunConfig& c, const std::string& v) {                         \
              c.FIELD = parse_number<int>(KEY, v);                         \
          },                                                               \
          [](const RunConfig& c) { return std::to_string(c.FIELD); }}

#define DOUBLE_ENTRY(KEY, FIELD, DESC)                                     \
    Entry{KEY, "float", DESC,                                              \
          [](RunConfig& c, const std::string& v) {                         \
              c.FIELD = parse_double(KEY, v);                              \
          },                                                               \
          [](const RunConfig& c) { return double_str(c.FIELD); }}

#define BOOL_ENTRY(KEY, FIELD, DESC)                                       \
    Entry{KEY, "bool", DESC,                                               \
          [](RunConfig& c, const std::string& v) {                         \
              c.FIELD = parse_bool(KEY, v);                                \
          },                                                               \
          [](const RunConfig& c) { return bool_str(c.FIELD); }}

#define STRING_ENTRY(KEY, FIELD, DESC)                                     \
    Entry{KEY, "string", DESC,                                             \
          [](RunConfig& c, const std::string& v) { c.FIELD = trim(v); },   \
          [](const RunConfig& c) { return c.FIELD; }}

#define U64_ENTRY(KEY, FIELD, DESC)                                        \
    Entry{KEY, "uint", DESC,                                               \
          [](RunConfig& c, const std::string& v) {                         \
              c.FIELD = parse_number<std::uint64_t>(KEY, v);               \
          },                                                               \
          [](const RunConfig& c) { return std::to_string(c.FIELD); }}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        U64_ENTRY("seed", seed, "master random seed"),
        STRING_ENTRY("data.interactions", data_interactions,
                     "interaction file (user item behavior timestamp)"),
        STRING_ENTRY("data.vocab", data_vocab,
                     "behavior vocabulary file, one label per line"),
        STRING_ENTRY("data.target_behavior", data_target,
                     "behavior to predict and evaluate on"),
        BOOL_ENTRY("data.target_only", data_target_only,
                   "drop all non-target interactions before training"),
        Entry{"time.granularity_seconds", "int",
              "seconds per time slot",
              [](RunConfig& c, const std::string& v) {
                  c.time_granularity = parse_number<std::int64_t>(
                      "time.granularity_seconds", v);
              },
              [](const RunConfig& c) {
                  return std::to_string(c.time_granularity);
              }},
        Entry{"time.origin", "int|auto",
              "timestamp mapped to slot 0; auto: smallest in the data",
              [](RunConfig& c, const std::string& v) {
                  const std::string t = trim(v);
                  if (t == "auto")
                      c.time_origin.reset();
                  else
                      c.time_origin =
                          parse_number<std::int64_t>("time.origin", t);
              },
              [](const RunConfig& c) {
                  return c.time_origin ? std::to_string(*c.time_origin)
                                       : std::string("auto");
              }},
        INT_ENTRY("model.dim", model_dim, "embedding width"),
        INT_ENTRY("model.layers", model_layers, "propagation layers"),
        INT_ENTRY("model.attention_heads", model_heads,
                  "heads in the sequence encoder"),
        INT_ENTRY("model.channels", model_channels,
                  "channels behind the behavior-specific transforms"),
        INT_ENTRY("model.window", model_window,
                  "events per sub-sequence"),
        INT_ENTRY("model.negatives", model_negatives,
                  "negative items per training example"),
        DOUBLE_ENTRY("model.lambda", model_lambda,
                     "L2 penalty on all parameters"),
        STRING_ENTRY("model.eta_mode", model_eta_mode,
                     "user aggregation weights: softmax | literal"),
        STRING_ENTRY("model.refine_gamma", model_refine,
                     "refinement uses the fresh | literal user state"),
        BOOL_ENTRY("model.mean_aggregation", model_mean_aggregation,
                   "average instead of sum when pooling neighbors"),
        INT_ENTRY("train.epochs", train_epochs, "training epochs"),
        INT_ENTRY("train.batch_size", train_batch, "examples per step"),
        DOUBLE_ENTRY("train.learning_rate", train_lr, "initial Adam rate"),
        DOUBLE_ENTRY("train.lr_decay", train_decay,
                     "multiplicative rate decay per epoch"),
        STRING_ENTRY("train.scope", train_scope,
                     "propagation scope per step: full | batch"),
        BOOL_ENTRY("train.fresh_negatives", train_fresh_negatives,
                   "resample negatives every epoch"),
        STRING_ENTRY("eval.cutoffs", eval_cutoffs,
                     "ranking cutoffs, comma separated"),
        INT_ENTRY("eval.candidates", eval_candidates,
                  "sampled distractor items per test user"),
        BOOL_ENTRY("eval.full_catalog", eval_full_catalog,
                   "rank against every non-interacted item instead"),
        BOOL_ENTRY("ablation.context_embedding_off", ab_context_off,
                   "replace behavior and time inputs with positions"),
        BOOL_ENTRY("ablation.sequence_encoder_off", ab_sequence_off,
                   "skip the attention encoder over sub-sequences"),
        BOOL_ENTRY("ablation.multi_channel_off", ab_multichannel_off,
                   "one shared transform instead of per-behavior ones"),
        BOOL_ENTRY("ablation.global_context_off", ab_global_off,
                   "skip user-level aggregation and refinement"),
        BOOL_ENTRY("ablation.concat_aggregation", ab_concat,
                   "combine behavior channels by concat + projection"),
        BOOL_ENTRY("ablation.frequency_aggregation", ab_frequency,
                   "weight behavior channels by frequency, not attention"),
        INT_ENTRY("synth.users", synth_users, "synthetic user count"),
        INT_ENTRY("synth.items", synth_items, "synthetic item count"),
        INT_ENTRY("synth.behaviors", synth_behaviors,
                  "behavior count, last one is the target"),
        INT_ENTRY("synth.horizon", synth_horizon, "steps to simulate"),
        INT_ENTRY("synth.preferred", synth_preferred,
                  "items in each user's personal pool"),
        DOUBLE_ENTRY("synth.context_rate", synth_context_rate,
                     "context event rate per behavior per step"),
        DOUBLE_ENTRY("synth.target_rate", synth_target_rate,
                     "spontaneous target event rate per step"),
        DOUBLE_ENTRY("synth.kappa", synth_kappa,
                     "chance a context event triggers a later target event"),
        INT_ENTRY("synth.window", synth_window,
                  "max delay of triggered target events"),
        U64_ENTRY("synth.seed", synth_seed, "synthetic generator seed"),
        INT_ENTRY("runtime.threads", runtime_threads,
                  "OpenMP threads, 0 keeps the environment default"),
        STRING_ENTRY("runtime.kernel_mode", runtime_kernel_mode,
                     "parallel | serial kernel dispatch"),
        STRING_ENTRY("out.dir", out_dir, "directory for written artifacts"),
    };
    return table;
}

#undef INT_ENTRY
#undef DOUBLE_ENTRY
#undef BOOL_ENTRY
#undef STRING_ENTRY
#undef U64_ENTRY

}  // namespace

std::vector<ConfigKey> config_schema() {
    RunConfig defaults;
    std::vector<ConfigKey> out;
    for (const auto& e : entries())
        out.push_back({e.key, e.type_name, e.get(defaults), e.description});
    return out;
}

void config_set(RunConfig& cfg, const std::string& key,
                const std::string& value) {
    for (const auto& e : entries()) {
        if (e.key == key) {
            e.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void load_config_file(RunConfig& cfg, std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": empty key");
        try {
            config_set(cfg, key, value);
        } catch (const ConfigError& err) {
            throw ConfigError("line " + std::to_string(line_no) + ": " +
                              err.what());
        }
    }
}

std::vector<int> parse_cutoffs(const std::string& spec) {
    std::vector<int> out;
    std::string tok;
    std::istringstream in(spec);
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty())
            throw ConfigError("eval.cutoffs: empty entry in '" + spec + "'");
        int v = parse_number<int>("eval.cutoffs", tok);
        if (v < 1)
            throw ConfigError("eval.cutoffs: cutoffs must be positive");
        if (!out.empty() && v <= out.back())
            throw ConfigError("eval.cutoffs: must be strictly increasing");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("eval.cutoffs: no cutoffs given");
    return out;
}

void validate_config(const RunConfig& cfg) {
    auto one_of = [](const std::string& key, const std::string& v,
                     std::initializer_list<const char*> allowed) {
        for (const char* a : allowed)
            if (v == a) return;
        std::string msg = key + ": '" + v + "' is not one of {";
        bool first = true;
        for (const char* a : allowed) {
            if (!first) msg += ", ";
            msg += a;
            first = false;
        }
        throw ConfigError(msg + "}");
    };
    one_of("model.eta_mode", cfg.model_eta_mode, {"softmax", "literal"});
    one_of("model.refine_gamma", cfg.model_refine, {"fresh", "literal"});
    one_of("train.scope", cfg.train_scope, {"full", "batch"});
    one_of("runtime.kernel_mode", cfg.runtime_kernel_mode,
           {"parallel", "serial"});
    if (cfg.model_dim < 1) throw ConfigError("model.dim must be positive");
    if (cfg.model_heads < 1)
        throw ConfigError("model.attention_heads must be positive");
    if (cfg.model_dim % cfg.model_heads != 0)
        throw ConfigError("model.dim must be divisible by "
                          "model.attention_heads");
    if (cfg.model_channels < 1)
        throw ConfigError("model.channels must be positive");
    if (cfg.model_layers < 1)
        throw ConfigError("model.layers must be positive");
    if (cfg.model_window < 1)
        throw ConfigError("model.window must be positive");
    if (cfg.model_negatives < 1)
        throw ConfigError("model.negatives must be positive");
    if (cfg.model_lambda < 0.0)
        throw ConfigError("model.lambda must be non-negative");
    if (cfg.time_granularity < 1)
        throw ConfigError("time.granularity_seconds must be positive");
    if (cfg.train_epochs < 0)
        throw ConfigError("train.epochs must be non-negative");
    if (cfg.train_batch < 1)
        throw ConfigError("train.batch_size must be positive");
    if (cfg.train_lr <= 0.0)
        throw ConfigError("train.learning_rate must be positive");
    if (cfg.train_decay <= 0.0 || cfg.train_decay > 1.0)
        throw ConfigError("train.lr_decay must be in (0, 1]");
    if (cfg.eval_candidates < 1)
        throw ConfigError("eval.candidates must be positive");
    if (cfg.ab_concat && cfg.ab_frequency)
        throw ConfigError("ablation.concat_aggregation and "
                          "ablation.frequency_aggregation are exclusive");
    parse_cutoffs(cfg.eval_cutoffs);
}

}  // namespace tgt
