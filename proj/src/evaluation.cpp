#include "tgt/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "tgt/errors.hpp"

namespace tgt {

int rank_against(double held_score, int held_item,
                 const std::vector<std::pair<int, double>>& candidates) {
    int rank = 1;
    for (const auto& [item, score] : candidates) {
        if (score > held_score || (score == held_score && item < held_item))
            ++rank;
    }
    return rank;
}

namespace {

// z ∘ h, so candidate scoring is a plain dot product per item.
std::vector<double> scoring_vector(const std::vector<double>& subusers,
                                   int slot, const std::vector<double>& z,
                                   int dim) {
    std::vector<double> zh(static_cast<std::size_t>(dim));
    const double* h = subusers.data() + static_cast<std::size_t>(slot) * dim;
    for (int k = 0; k < dim; ++k) zh[static_cast<std::size_t>(k)] = z[static_cast<std::size_t>(k)] * h[k];
    return zh;
}

double dot_item(const std::vector<double>& zh,
                const std::vector<double>& items, int item, int dim) {
    const double* e = items.data() + static_cast<std::size_t>(item) * dim;
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += zh[static_cast<std::size_t>(k)] * e[k];
    return s;
}

}  // namespace

RankingReport evaluate_model(const Model& model, const PreparedData& pd,
                             const TimeSlotMapper& tm, const EvalOptions& opt,
                             const Rng& master) {
    RankingReport report;
    report.cutoffs = opt.cutoffs;
    report.candidate_policy =
        opt.full_catalog ? "full-catalog"
                         : "sampled:" + std::to_string(opt.candidates);

    BatchGraph g = build_graph(pd);
    NoGradGuard ng;
    ForwardResult fr = model.forward(g, tm);

    const int dim = model.config().dim;
    const std::vector<double>& z = model.score_weight().values();
    const std::vector<double>& subusers = fr.subusers.values();
    const std::vector<double>& items = fr.items.values();
    const int item_count = pd.data.item_count();

    // Dense user -> scope index.
    std::vector<int> scope_of_user(
        static_cast<std::size_t>(pd.data.user_count()), -1);
    for (std::size_t ui = 0; ui < g.users.size(); ++ui)
        scope_of_user[static_cast<std::size_t>(g.users[ui])] =
            static_cast<int>(ui);

    std::vector<int> test_users;
    for (int u = 0; u < pd.data.user_count(); ++u)
        if (pd.split.test.count(u)) test_users.push_back(u);

    std::vector<UserRank> ranks(test_users.size());
    std::vector<char> ok(test_users.size(), 0);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ti = 0;
         ti < static_cast<std::ptrdiff_t>(test_users.size()); ++ti) {
        const int u = test_users[static_cast<std::size_t>(ti)];
        const int ui = scope_of_user[static_cast<std::size_t>(u)];
        if (ui < 0) continue;  // not in the trained graph
        const int held = pd.split.test.at(u).item;
        const auto& excluded =
            pd.user_target_items[static_cast<std::size_t>(u)];

        const int last_slot = g.user_slots[static_cast<std::size_t>(ui)].back();
        const std::vector<double> zh =
            scoring_vector(subusers, last_slot, z, dim);
        const double held_score = dot_item(zh, items, held, dim);

        std::vector<std::pair<int, double>> candidates;
        if (opt.full_catalog) {
            for (int j = 0; j < item_count; ++j) {
                if (j == held || excluded.count(j)) continue;
                candidates.push_back({j, dot_item(zh, items, j, dim)});
            }
        } else {
            // Distinct uniform draws, keyed by user so thread order and
            // scope cannot shift them.
            Rng rng = master.fork("eval-candidates",
                                  static_cast<std::uint64_t>(u));
            const int pool =
                item_count - static_cast<int>(excluded.size());
            const int want = std::min(opt.candidates, std::max(0, pool));
            std::unordered_set<int> taken;
            while (static_cast<int>(candidates.size()) < want) {
                const int j = static_cast<int>(
                    rng.below(static_cast<std::uint64_t>(item_count)));
                if (j == held || excluded.count(j) || !taken.insert(j).second)
                    continue;
                candidates.push_back({j, dot_item(zh, items, j, dim)});
            }
        }
        UserRank& r = ranks[static_cast<std::size_t>(ti)];
        r.user = u;
        r.original_user = pd.data.user_ids[static_cast<std::size_t>(u)];
        r.rank = rank_against(held_score, held, candidates);
        r.pool = static_cast<int>(candidates.size()) + 1;
        ok[static_cast<std::size_t>(ti)] = 1;
    }

    report.hit_rate.assign(opt.cutoffs.size(), 0.0);
    report.ndcg.assign(opt.cutoffs.size(), 0.0);
    for (std::size_t ti = 0; ti < test_users.size(); ++ti) {
        if (!ok[ti]) {
            ++report.skipped;
            continue;
        }
        ++report.evaluated;
        report.ranks.push_back(ranks[ti]);
        for (std::size_t c = 0; c < opt.cutoffs.size(); ++c) {
            if (ranks[ti].rank <= opt.cutoffs[c]) {
                report.hit_rate[c] += 1.0;
                report.ndcg[c] +=
                    1.0 / std::log2(static_cast<double>(ranks[ti].rank) + 1.0);
            }
        }
    }
    if (report.evaluated > 0) {
        for (std::size_t c = 0; c < opt.cutoffs.size(); ++c) {
            report.hit_rate[c] /= report.evaluated;
            report.ndcg[c] /= report.evaluated;
        }
    }
    return report;
}

void write_report(std::ostream& out, const RankingReport& report) {
    out << "# candidates\t" << report.candidate_policy << "\n";
    out << "# evaluated\t" << report.evaluated << "\n";
    out << "# skipped\t" << report.skipped << "\n";
    out << "cutoff\thit_rate\tndcg\n";
    out.precision(17);
    for (std::size_t c = 0; c < report.cutoffs.size(); ++c)
        out << report.cutoffs[c] << '\t' << report.hit_rate[c] << '\t'
            << report.ndcg[c] << '\n';
}

void write_ranks(std::ostream& out, const RankingReport& report) {
    out << "user\trank\tpool\n";
    for (const auto& r : report.ranks)
        out << r.original_user << '\t' << r.rank << '\t' << r.pool << '\n';
}

void export_diagnostics(std::ostream& gamma_out, std::ostream& eta_out,
                        const Model& model, const PreparedData& pd,
                        const TimeSlotMapper& tm) {
    BatchGraph g = build_graph(pd);
    NoGradGuard ng;
    ForwardResult fr = model.forward(g, tm);

    gamma_out << "user\tordinal";
    for (const auto& label : pd.data.behavior_labels)
        gamma_out << '\t' << label;
    gamma_out << '\n';
    gamma_out.precision(17);
    for (int slot = 0; slot < g.slot_count(); ++slot) {
        const SubSequence& s = *g.subseqs[static_cast<std::size_t>(slot)];
        gamma_out << pd.data.user_ids[static_cast<std::size_t>(s.user)] << '\t'
                  << s.ordinal;
        for (double w : fr.gamma[static_cast<std::size_t>(slot)])
            gamma_out << '\t' << w;
        gamma_out << '\n';
    }

    eta_out << "user\tordinal\tweight\n";
    eta_out.precision(17);
    for (std::size_t ui = 0; ui < g.users.size(); ++ui) {
        const auto& weights = fr.eta[ui];
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const int slot = g.user_slots[ui][k];
            eta_out << pd.data.user_ids[static_cast<std::size_t>(g.users[ui])]
                    << '\t'
                    << g.subseqs[static_cast<std::size_t>(slot)]->ordinal
                    << '\t' << weights[k] << '\n';
        }
    }
}

std::vector<Recommendation> recommend_items(const Model& model,
                                            const PreparedData& pd,
                                            const TimeSlotMapper& tm,
                                            int dense_user, int top_n) {
    if (dense_user < 0 || dense_user >= pd.data.user_count())
        throw DataError("user index out of range");
    if (top_n < 1) throw ConfigError("recommendation count must be positive");

    BatchGraph g = build_graph(pd);
    NoGradGuard ng;
    ForwardResult fr = model.forward(g, tm);

    int ui = -1;
    for (std::size_t i = 0; i < g.users.size(); ++i)
        if (g.users[i] == dense_user) ui = static_cast<int>(i);
    if (ui < 0)
        throw DataError("user has no training sub-sequences to score from");

    const int dim = model.config().dim;
    const std::vector<double> zh = scoring_vector(
        fr.subusers.values(),
        g.user_slots[static_cast<std::size_t>(ui)].back(),
        model.score_weight().values(), dim);
    const auto& excluded =
        pd.user_target_items[static_cast<std::size_t>(dense_user)];

    std::vector<std::pair<int, double>> scored;
    for (int j = 0; j < pd.data.item_count(); ++j) {
        if (excluded.count(j)) continue;
        scored.push_back({j, dot_item(zh, fr.items.values(), j, dim)});
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    if (static_cast<int>(scored.size()) > top_n)
        scored.resize(static_cast<std::size_t>(top_n));
    std::vector<Recommendation> out;
    for (const auto& [item, score] : scored)
        out.push_back({pd.data.item_ids[static_cast<std::size_t>(item)],
                       score});
    return out;
}

}  // namespace tgt
