#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "tgt/model.hpp"

namespace tgt {

struct EvalOptions {
    std::vector<int> cutoffs{1, 5, 10};
    int candidates = 99;
    bool full_catalog = false;
};

struct UserRank {
    int user = 0;  // dense id
    std::int64_t original_user = 0;
    int rank = 0;
    int pool = 0;  // held-out item + distractors
};

struct RankingReport {
    std::vector<int> cutoffs;
    std::vector<double> hit_rate;  // per cutoff
    std::vector<double> ndcg;
    std::vector<UserRank> ranks;  // ascending dense user id
    std::string candidate_policy;
    int evaluated = 0;
    int skipped = 0;
};

// Rank of the held-out item among the candidates, descending by score; a
// candidate beats it on an equal score only with a smaller item id.
int rank_against(double held_score, int held_item,
                 const std::vector<std::pair<int, double>>& candidates);

// Scores every test user's held-out item under their last sub-sequence
// state. Candidate draws are keyed per user, so scope and order don't
// matter. Users are processed in parallel and merged by id.
RankingReport evaluate_model(const Model& model, const PreparedData& pd,
                             const TimeSlotMapper& tm, const EvalOptions& opt,
                             const Rng& master);

void write_report(std::ostream& out, const RankingReport& report);
void write_ranks(std::ostream& out, const RankingReport& report);

// Final-layer attention diagnostics over the full graph, as two TSV tables.
void export_diagnostics(std::ostream& gamma_out, std::ostream& eta_out,
                        const Model& model, const PreparedData& pd,
                        const TimeSlotMapper& tm);

// Top-N items for one user, highest score first, ties by item id. Items the
// user already touched with the target behavior are left out.
struct Recommendation {
    std::int64_t item = 0;  // original id
    double score = 0.0;
};
std::vector<Recommendation> recommend_items(const Model& model,
                                            const PreparedData& pd,
                                            const TimeSlotMapper& tm,
                                            int dense_user, int top_n);

}  // namespace tgt
