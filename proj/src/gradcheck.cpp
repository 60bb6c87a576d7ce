#include "tgt/gradcheck.hpp"

#include "tgt/errors.hpp"
#include "tgt/temporal.hpp"
#include "tgt/training.hpp"

namespace tgt {

PreparedData gradcheck_corpus(int users, int behaviors, int window) {
    if (users < 1) throw ConfigError("gradcheck needs at least one user");
    if (behaviors < 2)
        throw ConfigError("gradcheck needs a context behavior and a target");

    Dataset ds;
    for (int b = 0; b + 1 < behaviors; ++b)
        ds.behavior_labels.push_back("ctx" + std::to_string(b));
    ds.behavior_labels.push_back("buy");
    const int items = 5;
    for (int u = 0; u < users; ++u) ds.user_ids.push_back(u);
    for (int i = 0; i < items; ++i) ds.item_ids.push_back(i);

    // Six events per user: buys on odd steps, rotating context behaviors on
    // even ones. The last buy is held out, leaving sub-sequences {0,1,2} and
    // {3,4} and exactly one instance (positive = the step-3 buy).
    for (int u = 0; u < users; ++u) {
        for (int k = 0; k < 6; ++k) {
            InteractionRecord r;
            r.user = u;
            r.item = (u + 2 * k) % items;
            r.behavior =
                (k % 2 == 1) ? behaviors - 1 : (k / 2) % (behaviors - 1);
            r.timestamp = 3600LL * k;
            ds.records.push_back(r);
        }
    }
    return prepare_data(std::move(ds), "buy", window);
}

GradCheckReport run_gradient_check(const GradCheckOptions& opt) {
    PreparedData pd = gradcheck_corpus(opt.users, opt.behaviors, opt.window);
    Rng master(opt.seed);
    fill_negatives(pd, 1, master.fork("negatives"));

    ModelConfig mc;
    mc.dim = opt.dim;
    mc.layers = opt.layers;
    mc.heads = opt.heads;
    mc.channels = opt.channels;
    mc.window = opt.window;
    Model model(mc, pd.data.user_count(), pd.data.item_count(),
                pd.data.behavior_count(), master.fork("model"));

    const TimeSlotMapper tm{3600, 0};
    const BatchGraph g = build_graph(pd);
    auto loss_fn = [&]() {
        return batch_loss(model, g, tm, pd.instances, opt.lambda);
    };

    GradCheckReport report;
    for (auto& [name, t] : model.parameters()) {
        const double err = finite_difference_check(loss_fn, {t}, opt.eps);
        report.params.push_back({name, err});
        if (err >= report.max_rel_err) {
            report.max_rel_err = err;
            report.worst_param = name;
        }
    }
    return report;
}

}  // namespace tgt
