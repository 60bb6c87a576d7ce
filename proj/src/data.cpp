#include "tgt/data.hpp"

#include <algorithm>
#include <map>
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

std::int64_t parse_int(const std::string& tok, int line_no,
                       const char* field) {
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " +
                         field + " '" + tok + "'");
    }
}

}  // namespace

int Dataset::behavior_id(const std::string& label) const {
    for (std::size_t i = 0; i < behavior_labels.size(); ++i)
        if (behavior_labels[i] == label) return static_cast<int>(i);
    throw DataError("unknown behavior '" + label + "'");
}

std::vector<std::string> load_vocab(std::istream& in) {
    std::vector<std::string> vocab;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (std::find(vocab.begin(), vocab.end(), t) != vocab.end())
            throw ParseError("line " + std::to_string(line_no) +
                             ": duplicate behavior '" + t + "'");
        vocab.push_back(t);
    }
    if (vocab.empty()) throw DataError("behavior vocabulary is empty");
    return vocab;
}

Dataset load_dataset(std::istream& in, std::vector<std::string> vocab) {
    if (vocab.empty()) throw DataError("behavior vocabulary is empty");
    std::unordered_map<std::string, int> behavior_of;
    for (std::size_t i = 0; i < vocab.size(); ++i)
        behavior_of[vocab[i]] = static_cast<int>(i);

    struct RawRecord {
        std::int64_t user, item, timestamp;
        int behavior;
    };
    std::vector<RawRecord> raw;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream fields(t);
        std::string u, i, b, ts, extra;
        if (!(fields >> u >> i >> b >> ts))
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected 'user item behavior timestamp', got '" +
                             t + "'");
        if (fields >> extra)
            throw ParseError("line " + std::to_string(line_no) +
                             ": trailing field '" + extra + "'");
        auto bit = behavior_of.find(b);
        if (bit == behavior_of.end())
            throw ParseError("line " + std::to_string(line_no) +
                             ": behavior '" + b +
                             "' not in the vocabulary");
        raw.push_back({parse_int(u, line_no, "user id"),
                       parse_int(i, line_no, "item id"),
                       parse_int(ts, line_no, "timestamp"), bit->second});
    }
    if (raw.empty()) throw DataError("no interactions in input");

    // Dense ids by ascending original id, independent of record order.
    std::map<std::int64_t, int> user_map, item_map;
    for (const auto& r : raw) {
        user_map.emplace(r.user, 0);
        item_map.emplace(r.item, 0);
    }
    Dataset ds;
    for (auto& [orig, dense] : user_map) {
        dense = static_cast<int>(ds.user_ids.size());
        ds.user_ids.push_back(orig);
    }
    for (auto& [orig, dense] : item_map) {
        dense = static_cast<int>(ds.item_ids.size());
        ds.item_ids.push_back(orig);
    }
    ds.behavior_labels = std::move(vocab);
    ds.records.reserve(raw.size());
    for (const auto& r : raw)
        ds.records.push_back({user_map[r.user], item_map[r.item], r.behavior,
                              r.timestamp});
    return ds;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
    for (const auto& r : ds.records)
        out << ds.user_ids[static_cast<std::size_t>(r.user)] << '\t'
            << ds.item_ids[static_cast<std::size_t>(r.item)] << '\t'
            << ds.behavior_labels[static_cast<std::size_t>(r.behavior)] << '\t'
            << r.timestamp << '\n';
}

Dataset filter_to_behavior(const Dataset& ds, int behavior) {
    Dataset out;
    out.user_ids = ds.user_ids;
    out.item_ids = ds.item_ids;
    out.behavior_labels = ds.behavior_labels;
    for (const auto& r : ds.records)
        if (r.behavior == behavior) out.records.push_back(r);
    if (out.records.empty())
        throw DataError("no interactions left after restricting to '" +
                        ds.behavior_labels[static_cast<std::size_t>(behavior)] +
                        "'");
    return out;
}

std::vector<UserSequence> build_sequences(const Dataset& ds) {
    std::vector<UserSequence> seqs(
        static_cast<std::size_t>(ds.user_count()));
    for (int u = 0; u < ds.user_count(); ++u)
        seqs[static_cast<std::size_t>(u)].user = u;
    for (const auto& r : ds.records)
        seqs[static_cast<std::size_t>(r.user)].records.push_back(r);
    for (auto& s : seqs)
        std::stable_sort(s.records.begin(), s.records.end(),
                         [](const InteractionRecord& a,
                            const InteractionRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
    return seqs;
}

std::vector<SubSequence> build_subsequences(
    const std::vector<UserSequence>& sequences, int window) {
    if (window < 1) throw ConfigError("window must be at least 1");
    std::vector<SubSequence> subs;
    for (const auto& seq : sequences) {
        int ordinal = 0;
        for (std::size_t at = 0; at < seq.records.size();
             at += static_cast<std::size_t>(window)) {
            SubSequence s;
            s.id = static_cast<int>(subs.size());
            s.user = seq.user;
            s.ordinal = ordinal++;
            const std::size_t end =
                std::min(at + static_cast<std::size_t>(window),
                         seq.records.size());
            s.records.assign(seq.records.begin() + static_cast<long>(at),
                             seq.records.begin() + static_cast<long>(end));
            subs.push_back(std::move(s));
        }
    }
    return subs;
}

LeaveOneOut leave_one_out(const std::vector<UserSequence>& sequences,
                          int target_behavior) {
    LeaveOneOut out;
    out.train = sequences;
    for (auto& seq : out.train) {
        int last = -1, count = 0;
        for (std::size_t i = 0; i < seq.records.size(); ++i) {
            if (seq.records[i].behavior == target_behavior) {
                ++count;
                last = static_cast<int>(i);
            }
        }
        if (count < 2) continue;
        const auto& held = seq.records[static_cast<std::size_t>(last)];
        out.test[seq.user] = {held.item, held.timestamp};
        seq.records.erase(seq.records.begin() + last);
    }
    return out;
}

std::vector<int> sample_negatives(int count, int item_count,
                                  const std::unordered_set<int>& exclude,
                                  Rng& rng) {
    if (static_cast<int>(exclude.size()) >= item_count)
        throw DataError("no items left to sample negatives from");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        int item =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(item_count)));
        if (exclude.count(item)) continue;
        out.push_back(item);
    }
    return out;
}

PreparedData prepare_data(Dataset ds, const std::string& target_label,
                          int window) {
    PreparedData pd;
    pd.target_behavior = ds.behavior_id(target_label);
    pd.window = window;
    pd.data = std::move(ds);

    pd.user_target_items.assign(
        static_cast<std::size_t>(pd.data.user_count()), {});
    for (const auto& r : pd.data.records)
        if (r.behavior == pd.target_behavior)
            pd.user_target_items[static_cast<std::size_t>(r.user)].insert(
                r.item);

    auto sequences = build_sequences(pd.data);
    pd.split = leave_one_out(sequences, pd.target_behavior);
    pd.subsequences = build_subsequences(pd.split.train, window);

    pd.user_subseqs.assign(static_cast<std::size_t>(pd.data.user_count()),
                           {});
    for (const auto& s : pd.subsequences)
        pd.user_subseqs[static_cast<std::size_t>(s.user)].push_back(s.id);

    // One instance per sub-sequence that has a later target event in the
    // training data; that event's item is the positive.
    for (const auto& s : pd.subsequences) {
        const auto& train_records =
            pd.split.train[static_cast<std::size_t>(s.user)].records;
        const std::int64_t after = s.last_timestamp();
        const InteractionRecord* next = nullptr;
        for (const auto& r : train_records) {
            if (r.behavior == pd.target_behavior && r.timestamp > after) {
                next = &r;
                break;  // records are chronological
            }
        }
        if (!next) continue;
        TrainingInstance inst;
        inst.user = s.user;
        inst.subseq = s.id;
        inst.positive = next->item;
        pd.instances.push_back(std::move(inst));
    }
    return pd;
}

void fill_negatives(PreparedData& pd, int count, Rng rng) {
    for (auto& inst : pd.instances)
        inst.negatives = sample_negatives(
            count, pd.data.item_count(),
            pd.user_target_items[static_cast<std::size_t>(inst.user)], rng);
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.users < 1 || cfg.items < 2 || cfg.behaviors < 2 ||
        cfg.horizon < 2 || cfg.window < 1)
        throw ConfigError("synthetic corpus needs at least 1 user, 2 items, "
                          "2 behaviors, 2 steps and a positive window");
    if (cfg.preferred < 1 || cfg.preferred > cfg.items)
        throw ConfigError("preferred pool size must be in [1, items]");

    static const char* kContextNames[] = {"click", "view", "cart", "fav",
                                          "tag"};
    Dataset ds;
    for (int b = 0; b + 1 < cfg.behaviors; ++b) {
        if (b < 5)
            ds.behavior_labels.push_back(kContextNames[b]);
        else
            ds.behavior_labels.push_back("ctx" + std::to_string(b));
    }
    ds.behavior_labels.push_back("buy");
    const int target = cfg.behaviors - 1;

    Rng rng(cfg.seed);
    std::vector<bool> item_seen(static_cast<std::size_t>(cfg.items), false);
    std::vector<bool> user_seen(static_cast<std::size_t>(cfg.users), false);

    for (int u = 0; u < cfg.users; ++u) {
        Rng ur = rng.fork("user", static_cast<std::uint64_t>(u));
        // Personal item pool, distinct items.
        std::vector<int> pool;
        std::unordered_set<int> in_pool;
        while (static_cast<int>(pool.size()) < cfg.preferred) {
            int it = static_cast<int>(
                ur.below(static_cast<std::uint64_t>(cfg.items)));
            if (in_pool.insert(it).second) pool.push_back(it);
        }
        // Each user signals intent through one personal context behavior:
        // events of that type convert at kappa, the rest at a fifth of it.
        // Real logs look like this (one shopper's carts mean business,
        // another's clicks do), and it keeps the corpus from being
        // symmetric across types, which would make every aggregation
        // scheme equivalent on average.
        const int strong = static_cast<int>(
            ur.below(static_cast<std::uint64_t>(cfg.behaviors - 1)));
        // item -> steps at which a triggered target event fires
        std::multimap<int, int> due;
        for (int t = 0; t < cfg.horizon; ++t) {
            auto [from, to] = due.equal_range(t);
            for (auto it = from; it != to; ++it)
                ds.records.push_back({u, it->second, target, t});
            due.erase(from, to);
            for (int b = 0; b + 1 < cfg.behaviors; ++b) {
                if (ur.real() >= cfg.context_rate) continue;
                int item = pool[ur.below(pool.size())];
                ds.records.push_back({u, item, b, t});
                const double convert =
                    b == strong ? cfg.kappa : 0.2 * cfg.kappa;
                if (ur.real() < convert) {
                    int delay =
                        1 + static_cast<int>(ur.below(
                                static_cast<std::uint64_t>(cfg.window)));
                    if (t + delay < cfg.horizon)
                        due.emplace(t + delay, item);
                }
            }
            if (ur.real() < cfg.target_rate)
                ds.records.push_back({u, pool[ur.below(pool.size())],
                                      target, t});
        }
    }
    if (ds.records.empty())
        throw DataError("synthetic generator produced no interactions; "
                        "raise the rates or the horizon");

    // Dense ids double as original ids here, but unseen items would leave
    // holes, so remap the same way file loading does.
    for (const auto& r : ds.records) {
        user_seen[static_cast<std::size_t>(r.user)] = true;
        item_seen[static_cast<std::size_t>(r.item)] = true;
    }
    std::vector<int> user_dense(static_cast<std::size_t>(cfg.users), -1);
    std::vector<int> item_dense(static_cast<std::size_t>(cfg.items), -1);
    for (int u = 0; u < cfg.users; ++u)
        if (user_seen[static_cast<std::size_t>(u)]) {
            user_dense[static_cast<std::size_t>(u)] =
                static_cast<int>(ds.user_ids.size());
            ds.user_ids.push_back(u);
        }
    for (int i = 0; i < cfg.items; ++i)
        if (item_seen[static_cast<std::size_t>(i)]) {
            item_dense[static_cast<std::size_t>(i)] =
                static_cast<int>(ds.item_ids.size());
            ds.item_ids.push_back(i);
        }
    for (auto& r : ds.records) {
        r.user = user_dense[static_cast<std::size_t>(r.user)];
        r.item = item_dense[static_cast<std::size_t>(r.item)];
    }
    return ds;
}

}  // namespace tgt
