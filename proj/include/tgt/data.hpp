#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tgt/rng.hpp"

namespace tgt {

// One interaction after id remapping: user/item/behavior are dense indices,
// timestamp is raw seconds (or steps, for synthetic data).
struct InteractionRecord {
    int user = 0;
    int item = 0;
    int behavior = 0;
    std::int64_t timestamp = 0;
    friend bool operator==(const InteractionRecord&,
                           const InteractionRecord&) = default;
};

struct Dataset {
    std::vector<InteractionRecord> records;  // input order
    std::vector<std::int64_t> user_ids;      // dense id -> original id
    std::vector<std::int64_t> item_ids;
    std::vector<std::string> behavior_labels;  // dense id -> label

    int user_count() const { return static_cast<int>(user_ids.size()); }
    int item_count() const { return static_cast<int>(item_ids.size()); }
    int behavior_count() const {
        return static_cast<int>(behavior_labels.size());
    }
    int behavior_id(const std::string& label) const;  // DataError if unknown
};

// One label per line; blank lines and # comments skipped. Order defines ids.
std::vector<std::string> load_vocab(std::istream& in);

// Tab- or space-separated `user item behavior timestamp` lines. Unknown
// behavior labels, bad numbers and short lines raise ParseError with the
// line number. Original ids may be arbitrary 64-bit integers; dense ids are
// assigned by ascending original id.
Dataset load_dataset(std::istream& in, std::vector<std::string> vocab);

// Writes records back out in the same text format, with original ids.
void write_dataset(std::ostream& out, const Dataset& ds);

// Keeps only records of one behavior; id tables are preserved so the model
// stays size-compatible with the full data.
Dataset filter_to_behavior(const Dataset& ds, int behavior);

// Per-user records sorted by timestamp, input order breaking ties. Indexed
// by dense user id.
struct UserSequence {
    int user = 0;
    std::vector<InteractionRecord> records;
};
std::vector<UserSequence> build_sequences(const Dataset& ds);

// Consecutive windows of at most `window` events; a short tail is kept as
// its own sub-sequence. Ids are global, assigned user-major then ordinal.
struct SubSequence {
    int id = 0;
    int user = 0;
    int ordinal = 0;  // position within the user, chronological
    std::vector<InteractionRecord> records;
    std::int64_t last_timestamp() const { return records.back().timestamp; }
};
std::vector<SubSequence> build_subsequences(
    const std::vector<UserSequence>& sequences, int window);

// Holds out the chronologically last target-behavior event of every user
// with at least two of them. Everything else stays in training.
struct HeldOut {
    int item = 0;
    std::int64_t timestamp = 0;
};
struct LeaveOneOut {
    std::vector<UserSequence> train;               // same indexing as input
    std::unordered_map<int, HeldOut> test;         // user -> held-out event
};
LeaveOneOut leave_one_out(const std::vector<UserSequence>& sequences,
                          int target_behavior);

// `count` uniform draws with replacement from items the user never touched
// with the target behavior. DataError if no such item exists.
std::vector<int> sample_negatives(int count, int item_count,
                                  const std::unordered_set<int>& exclude,
                                  Rng& rng);

// A scored training example: one sub-sequence, the next target item after
// it, and sampled negatives.
struct TrainingInstance {
    int user = 0;
    int subseq = 0;  // global sub-sequence id
    int positive = 0;
    std::vector<int> negatives;
};

// Everything derived from one dataset + target behavior + window size.
struct PreparedData {
    Dataset data;
    int target_behavior = 0;
    int window = 0;
    LeaveOneOut split;
    std::vector<SubSequence> subsequences;        // built from split.train
    std::vector<std::vector<int>> user_subseqs;   // user -> global ids
    // Target items per user over the FULL data (negatives must avoid these).
    std::vector<std::unordered_set<int>> user_target_items;
    std::vector<TrainingInstance> instances;      // negatives not yet drawn
};

PreparedData prepare_data(Dataset ds, const std::string& target_label,
                          int window);

// Draws `count` negatives for every instance, in instance order. Called once
// per epoch with an epoch-keyed stream when negatives are refreshed.
void fill_negatives(PreparedData& pd, int count, Rng rng);

// --- synthetic corpus -------------------------------------------------------

// Users repeatedly touch items from a small personal pool with the context
// behaviors. Each context event triggers, with probability `kappa`, a target
// event on the same item 1..window steps later; target events also fire
// spontaneously at `target_rate`. Timestamps are step indices.
struct SyntheticConfig {
    int users = 1000;
    int items = 500;
    int behaviors = 4;  // last one is the target
    int horizon = 220;
    int preferred = 25;      // size of each user's item pool
    double context_rate = 0.08;  // per context behavior per step
    double target_rate = 0.01;
    double kappa = 0.5;
    int window = 5;
    std::uint64_t seed = 7;
};

Dataset generate_synthetic(const SyntheticConfig& cfg);

}  // namespace tgt
