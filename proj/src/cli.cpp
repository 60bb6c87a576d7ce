#include "tgt/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "tgt/checkpoint.hpp"
#include "tgt/config.hpp"
#include "tgt/data.hpp"
#include "tgt/errors.hpp"
#include "tgt/evaluation.hpp"
#include "tgt/gradcheck.hpp"
#include "tgt/kernels.hpp"
#include "tgt/model.hpp"
#include "tgt/temporal.hpp"
#include "tgt/training.hpp"

namespace fs = std::filesystem;

namespace tgt {
namespace {

constexpr double kGradCheckBar = 1e-4;

struct CommonArgs {
    std::string config_path;
    // Applied in the order given, after the file, so flags win.
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_flags(CLI::App* cmd, CommonArgs& c,
                      const std::string& skip_key = "") {
    cmd->add_option("--config", c.config_path,
                    "key = value configuration file");
    for (const auto& k : config_schema()) {
        if (k.key == skip_key) continue;
        auto* target = &c;
        cmd->add_option_function<std::string>(
               "--" + k.key,
               [target, key = k.key](const std::string& v) {
                   target->overrides.emplace_back(key, v);
               },
               k.description + " (default " + k.default_value + ")")
            ->type_name(k.type_name);
    }
}

// One extra spelling for a config key, e.g. synth --users.
void add_alias(CLI::App* cmd, CommonArgs& c, const std::string& flag,
               const std::string& key, const std::string& help) {
    auto* target = &c;
    cmd->add_option_function<std::string>(
           flag,
           [target, key](const std::string& v) {
               target->overrides.emplace_back(key, v);
           },
           help)
        ->type_name("value");
}

RunConfig resolve_config(const CommonArgs& c) {
    RunConfig cfg;
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in)
            throw DataError("cannot open config file '" + c.config_path + "'");
        load_config_file(cfg, in);
    }
    for (const auto& [key, value] : c.overrides) config_set(cfg, key, value);
    validate_config(cfg);
    return cfg;
}

void apply_runtime(const RunConfig& cfg) {
#ifdef _OPENMP
    if (cfg.runtime_threads > 0) omp_set_num_threads(cfg.runtime_threads);
#endif
    kern::set_mode(cfg.runtime_kernel_mode == "serial" ? kern::Mode::serial
                                                       : kern::Mode::parallel);
}

Dataset load_input(const RunConfig& cfg) {
    if (cfg.data_interactions.empty())
        throw ConfigError("data.interactions is required for this command");
    if (cfg.data_vocab.empty())
        throw ConfigError("data.vocab is required for this command");
    std::ifstream vin(cfg.data_vocab);
    if (!vin) throw DataError("cannot open vocab '" + cfg.data_vocab + "'");
    std::vector<std::string> vocab = load_vocab(vin);
    std::ifstream din(cfg.data_interactions);
    if (!din)
        throw DataError("cannot open interactions '" + cfg.data_interactions +
                        "'");
    Dataset ds = load_dataset(din, std::move(vocab));
    if (cfg.data_target_only)
        ds = filter_to_behavior(ds, ds.behavior_id(cfg.data_target));
    return ds;
}

TimeSlotMapper resolve_time(const RunConfig& cfg, const PreparedData& pd) {
    TimeSlotMapper tm{cfg.time_granularity, 0};
    if (cfg.time_origin) {
        tm.origin = *cfg.time_origin;
        return tm;
    }
    bool any = false;
    std::int64_t lo = 0;
    for (const auto& seq : pd.split.train)
        for (const auto& r : seq.records)
            if (!any || r.timestamp < lo) {
                lo = r.timestamp;
                any = true;
            }
    tm.origin = lo;
    return tm;
}

Model make_model(const RunConfig& cfg, const PreparedData& pd) {
    return Model(model_config_from(cfg), pd.data.user_count(),
                 pd.data.item_count(), pd.data.behavior_count(),
                 Rng(cfg.seed));
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    return out;
}

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create output directory '" + cfg.out_dir +
                        "': " + ec.message());
    return dir;
}

TrainOptions train_options(const RunConfig& cfg) {
    TrainOptions opt;
    opt.epochs = cfg.train_epochs;
    opt.batch_size = cfg.train_batch;
    opt.negatives = cfg.model_negatives;
    opt.lr = cfg.train_lr;
    opt.decay = cfg.train_decay;
    opt.lambda = cfg.model_lambda;
    opt.fresh_negatives = cfg.train_fresh_negatives;
    opt.batch_scope = cfg.train_scope == "batch";
    return opt;
}

struct TrainedRun {
    PreparedData pd;
    TimeSlotMapper tm;
    Model model;
};

TrainedRun train_pipeline(const RunConfig& cfg, const std::string& resume) {
    PreparedData pd =
        prepare_data(load_input(cfg), cfg.data_target, cfg.model_window);
    const TimeSlotMapper tm = resolve_time(cfg, pd);
    Model model = make_model(cfg, pd);
    Adam adam;

    TrainOptions opt = train_options(cfg);
    if (!resume.empty()) {
        CheckpointExtra extra;
        load_checkpoint(resume, model, &adam, &extra);
        opt.start_epoch = static_cast<int>(extra.next_epoch);
        std::cout << "resuming at epoch " << opt.start_epoch << "\n";
    }

    const fs::path dir = prepare_out_dir(cfg);
    std::ofstream log = open_out(dir / "loss.tsv");
    log << "epoch\tloss\n";
    Rng master(cfg.seed);
    train_model(model, pd, tm, opt, master, adam,
                [&](int epoch, double loss) {
                    log << epoch << '\t' << loss << '\n';
                    log.flush();
                    std::cout << "epoch " << epoch << " loss "
                              << std::setprecision(17) << loss << "\n";
                });

    const CheckpointExtra extra{opt.epochs};
    const fs::path ckpt = dir / "model.ckpt";
    save_checkpoint(ckpt.string(), model, &adam, &extra);
    std::cout << "wrote " << (dir / "loss.tsv").string() << "\n";
    std::cout << "wrote " << ckpt.string() << "\n";
    return {std::move(pd), tm, std::move(model)};
}

int eval_and_report(const RunConfig& cfg, const Model& model,
                    const PreparedData& pd, const TimeSlotMapper& tm,
                    bool export_attention) {
    EvalOptions eo;
    eo.cutoffs = parse_cutoffs(cfg.eval_cutoffs);
    eo.candidates = cfg.eval_candidates;
    eo.full_catalog = cfg.eval_full_catalog;
    const RankingReport report =
        evaluate_model(model, pd, tm, eo, Rng(cfg.seed));

    const fs::path dir = prepare_out_dir(cfg);
    {
        std::ofstream out = open_out(dir / "report.tsv");
        write_report(out, report);
        std::ofstream ranks = open_out(dir / "ranks.tsv");
        write_ranks(ranks, report);
    }
    if (export_attention) {
        std::ofstream gamma = open_out(dir / "gamma.tsv");
        std::ofstream eta = open_out(dir / "eta.tsv");
        export_diagnostics(gamma, eta, model, pd, tm);
        std::cout << "wrote " << (dir / "gamma.tsv").string() << " and "
                  << (dir / "eta.tsv").string() << "\n";
    }

    std::cout << std::setprecision(6);
    for (std::size_t i = 0; i < report.cutoffs.size(); ++i)
        std::cout << "HR@" << report.cutoffs[i] << " " << report.hit_rate[i]
                  << "  NDCG@" << report.cutoffs[i] << " " << report.ndcg[i]
                  << "\n";
    std::cout << "evaluated " << report.evaluated << " users, skipped "
              << report.skipped << "\n";
    std::cout << "wrote " << (dir / "report.tsv").string() << " and "
              << (dir / "ranks.tsv").string() << "\n";
    return 0;
}

int cmd_ingest(const RunConfig& cfg) {
    PreparedData pd =
        prepare_data(load_input(cfg), cfg.data_target, cfg.model_window);
    const Dataset& ds = pd.data;
    std::int64_t lo = 0, hi = 0;
    std::vector<std::size_t> per_behavior(
        static_cast<std::size_t>(ds.behavior_count()), 0);
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        ++per_behavior[static_cast<std::size_t>(r.behavior)];
        if (i == 0 || r.timestamp < lo) lo = r.timestamp;
        if (i == 0 || r.timestamp > hi) hi = r.timestamp;
    }
    std::cout << "records\t" << ds.records.size() << "\n";
    std::cout << "users\t" << ds.user_count() << "\n";
    std::cout << "items\t" << ds.item_count() << "\n";
    std::cout << "behaviors\t" << ds.behavior_count() << "\n";
    for (int b = 0; b < ds.behavior_count(); ++b)
        std::cout << "behavior\t" << ds.behavior_labels[static_cast<std::size_t>(b)]
                  << "\t" << per_behavior[static_cast<std::size_t>(b)] << "\n";
    std::cout << "time_range\t" << lo << "\t" << hi << "\n";
    std::cout << "subsequences\t" << pd.subsequences.size() << "\n";
    std::cout << "test_users\t" << pd.split.test.size() << "\n";
    std::cout << "instances\t" << pd.instances.size() << "\n";
    return 0;
}

int cmd_synth(const RunConfig& cfg) {
    SyntheticConfig sc;
    sc.users = cfg.synth_users;
    sc.items = cfg.synth_items;
    sc.behaviors = cfg.synth_behaviors;
    sc.horizon = cfg.synth_horizon;
    sc.preferred = cfg.synth_preferred;
    sc.context_rate = cfg.synth_context_rate;
    sc.target_rate = cfg.synth_target_rate;
    sc.kappa = cfg.synth_kappa;
    sc.window = cfg.synth_window;
    sc.seed = cfg.synth_seed;
    const Dataset ds = generate_synthetic(sc);

    const fs::path dir = prepare_out_dir(cfg);
    {
        std::ofstream out = open_out(dir / "interactions.tsv");
        write_dataset(out, ds);
        std::ofstream vout = open_out(dir / "vocab.txt");
        for (const auto& label : ds.behavior_labels) vout << label << "\n";
    }
    std::cout << "wrote " << (dir / "interactions.tsv").string() << " ("
              << ds.records.size() << " records, " << ds.user_count()
              << " users, " << ds.item_count() << " items)\n";
    std::cout << "wrote " << (dir / "vocab.txt").string() << " ("
              << ds.behavior_count() << " behaviors)\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::string ckpt,
                 bool export_attention) {
    PreparedData pd =
        prepare_data(load_input(cfg), cfg.data_target, cfg.model_window);
    const TimeSlotMapper tm = resolve_time(cfg, pd);
    Model model = make_model(cfg, pd);
    if (ckpt.empty()) ckpt = (fs::path(cfg.out_dir) / "model.ckpt").string();
    load_checkpoint(ckpt, model);
    return eval_and_report(cfg, model, pd, tm, export_attention);
}

int cmd_recommend(const RunConfig& cfg, std::string ckpt, std::int64_t user,
                  int count) {
    if (count < 1) throw ConfigError("the recommendation count must be >= 1");
    PreparedData pd =
        prepare_data(load_input(cfg), cfg.data_target, cfg.model_window);
    const TimeSlotMapper tm = resolve_time(cfg, pd);
    Model model = make_model(cfg, pd);
    if (ckpt.empty()) ckpt = (fs::path(cfg.out_dir) / "model.ckpt").string();
    load_checkpoint(ckpt, model);

    const auto& ids = pd.data.user_ids;
    const auto it = std::lower_bound(ids.begin(), ids.end(), user);
    if (it == ids.end() || *it != user)
        throw DataError("unknown user id " + std::to_string(user));
    const int dense = static_cast<int>(it - ids.begin());

    const auto recs = recommend_items(model, pd, tm, dense, count);
    std::cout << std::setprecision(17);
    for (std::size_t i = 0; i < recs.size(); ++i)
        std::cout << (i + 1) << "\t" << recs[i].item << "\t" << recs[i].score
                  << "\n";
    return 0;
}

int cmd_gradcheck(const RunConfig& cfg, int dim, double eps) {
    GradCheckOptions opt;
    opt.dim = dim;
    opt.layers = cfg.model_layers;
    opt.heads = cfg.model_heads;
    opt.channels = cfg.model_channels;
    opt.eps = eps;
    opt.lambda = cfg.model_lambda;
    opt.seed = cfg.seed;
    const GradCheckReport report = run_gradient_check(opt);
    std::cout << std::scientific << std::setprecision(6);
    for (const auto& entry : report.params)
        std::cout << "parameter " << entry.name << " " << entry.max_rel_err
                  << "\n";
    std::cout << "max relative error " << report.max_rel_err << " ("
              << report.worst_param << ")\n";
    if (report.max_rel_err < kGradCheckBar) return 0;
    std::cerr << "gradient check failed: " << std::scientific
              << report.max_rel_err << " >= " << kGradCheckBar << "\n";
    return 3;
}

const std::map<std::string, std::string>& ablate_flags() {
    static const std::map<std::string, std::string> flags{
        {"context", "ablation.context_embedding_off"},
        {"sequence", "ablation.sequence_encoder_off"},
        {"multichannel", "ablation.multi_channel_off"},
        {"global", "ablation.global_context_off"},
        {"concat", "ablation.concat_aggregation"},
        {"frequency", "ablation.frequency_aggregation"},
        {"target-only", "data.target_only"},
    };
    return flags;
}

int cmd_ablate(RunConfig cfg, const std::vector<std::string>& flags,
               bool export_attention) {
    for (const auto& f : flags) {
        const auto it = ablate_flags().find(f);
        if (it == ablate_flags().end()) {
            std::cerr << "unknown ablation flag '" << f << "'; known flags:";
            for (const auto& [name, key] : ablate_flags())
                std::cerr << " " << name;
            std::cerr << "\n";
            return 1;
        }
        config_set(cfg, it->second, "true");
    }
    validate_config(cfg);
    std::cout << "variant:";
    if (flags.empty()) std::cout << " (none)";
    for (const auto& f : flags) std::cout << " " << f;
    std::cout << "\n";
    TrainedRun run = train_pipeline(cfg, "");
    return eval_and_report(cfg, run.model, run.pd, run.tm, export_attention);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"temporal graph transformer recommender", "tgt"};
    app.require_subcommand(1);

    CLI::App* ingest = app.add_subcommand(
        "ingest", "parse a dataset and print its statistics");
    CommonArgs ingest_args;
    add_config_flags(ingest, ingest_args);

    CLI::App* synth = app.add_subcommand(
        "synth", "write a synthetic interaction corpus");
    CommonArgs synth_args;
    add_config_flags(synth, synth_args, "seed");
    add_alias(synth, synth_args, "--users", "synth.users", "synthetic users");
    add_alias(synth, synth_args, "--items", "synth.items", "synthetic items");
    add_alias(synth, synth_args, "--behaviors", "synth.behaviors",
              "behavior count, target included");
    add_alias(synth, synth_args, "--horizon", "synth.horizon",
              "steps to simulate");
    add_alias(synth, synth_args, "--preferred", "synth.preferred",
              "per-user item pool");
    add_alias(synth, synth_args, "--kappa", "synth.kappa",
              "context-to-target trigger probability");
    add_alias(synth, synth_args, "--seed", "synth.seed", "generator seed");

    CLI::App* train = app.add_subcommand(
        "train", "fit a model, writing a loss log and a checkpoint");
    CommonArgs train_args;
    add_config_flags(train, train_args);
    std::string resume;
    train->add_option("--resume", resume,
                      "checkpoint to continue training from");

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "rank held-out items and write the metric report");
    CommonArgs eval_args;
    add_config_flags(evaluate, eval_args);
    std::string eval_ckpt;
    evaluate->add_option("--checkpoint", eval_ckpt,
                         "checkpoint to evaluate (default <out.dir>/model.ckpt)");
    bool eval_export = false;
    evaluate->add_flag("--export-attention", eval_export,
                       "also write cross-type and aggregation weights");

    CLI::App* recommend = app.add_subcommand(
        "recommend", "print the top-N items for one user");
    CommonArgs rec_args;
    add_config_flags(recommend, rec_args);
    std::int64_t rec_user = 0;
    int rec_count = 0;
    recommend->add_option("user", rec_user, "original user id")->required();
    recommend->add_option("count", rec_count, "list length")->required();
    std::string rec_ckpt;
    recommend->add_option("--checkpoint", rec_ckpt,
                          "checkpoint to score with");

    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "finite-difference check of the training gradients");
    CommonArgs grad_args;
    add_config_flags(gradcheck, grad_args);
    int grad_dim = 8;
    double grad_eps = 1e-5;
    gradcheck->add_option("--dim", grad_dim, "embedding width (default 8)");
    gradcheck->add_option("--eps", grad_eps,
                          "finite-difference step (default 1e-5)");

    CLI::App* ablate = app.add_subcommand(
        "ablate", "train and evaluate a model variant");
    CommonArgs ablate_args;
    add_config_flags(ablate, ablate_args);
    std::vector<std::string> ablate_names;
    ablate->add_option("flags", ablate_names,
                       "variant switches: context sequence multichannel "
                       "global concat frequency target-only");
    bool ablate_export = false;
    ablate->add_flag("--export-attention", ablate_export,
                     "also write cross-type and aggregation weights");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (ingest->parsed()) {
            RunConfig cfg = resolve_config(ingest_args);
            apply_runtime(cfg);
            return cmd_ingest(cfg);
        }
        if (synth->parsed()) {
            RunConfig cfg = resolve_config(synth_args);
            apply_runtime(cfg);
            return cmd_synth(cfg);
        }
        if (train->parsed()) {
            RunConfig cfg = resolve_config(train_args);
            apply_runtime(cfg);
            train_pipeline(cfg, resume);
            return 0;
        }
        if (evaluate->parsed()) {
            RunConfig cfg = resolve_config(eval_args);
            apply_runtime(cfg);
            return cmd_evaluate(cfg, eval_ckpt, eval_export);
        }
        if (recommend->parsed()) {
            RunConfig cfg = resolve_config(rec_args);
            apply_runtime(cfg);
            return cmd_recommend(cfg, rec_ckpt, rec_user, rec_count);
        }
        if (gradcheck->parsed()) {
            RunConfig cfg = resolve_config(grad_args);
            apply_runtime(cfg);
            return cmd_gradcheck(cfg, grad_dim, grad_eps);
        }
        if (ablate->parsed()) {
            RunConfig cfg = resolve_config(ablate_args);
            apply_runtime(cfg);
            return cmd_ablate(std::move(cfg), ablate_names, ablate_export);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ShapeError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace tgt
