#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>
#include <string>
#include <vector>

#include "tgt/data.hpp"
#include "tgt/errors.hpp"
#include "tgt/rng.hpp"

using namespace tgt;

namespace {

Dataset parse(const std::string& text,
              std::vector<std::string> vocab = {"view", "buy"}) {
    std::istringstream in(text);
    return load_dataset(in, std::move(vocab));
}

}  // namespace

TEST_CASE("vocab skips blanks and comments, keeps order") {
    std::istringstream in("# behaviors\n\nview\n  cart  \nbuy\n");
    auto vocab = load_vocab(in);
    REQUIRE(vocab.size() == 3);
    CHECK(vocab[0] == "view");
    CHECK(vocab[1] == "cart");
    CHECK(vocab[2] == "buy");
}

TEST_CASE("vocab rejects duplicates with the line number") {
    std::istringstream in("view\nbuy\nview\n");
    CHECK_THROWS_WITH_AS(load_vocab(in), "line 3: duplicate behavior 'view'",
                         ParseError);
    std::istringstream empty("\n# nothing\n");
    CHECK_THROWS_AS(load_vocab(empty), DataError);
}

TEST_CASE("dense ids follow ascending original ids, not input order") {
    Dataset ds = parse("50 900 view 10\n3 7 buy 20\n50 7 view 30\n");
    REQUIRE(ds.user_ids == std::vector<std::int64_t>{3, 50});
    REQUIRE(ds.item_ids == std::vector<std::int64_t>{7, 900});
    // First record: user 50 -> dense 1, item 900 -> dense 1.
    CHECK(ds.records[0].user == 1);
    CHECK(ds.records[0].item == 1);
    CHECK(ds.records[1].user == 0);
    CHECK(ds.records[1].item == 0);
    CHECK(ds.records[2].user == 1);
    CHECK(ds.records[2].item == 0);
    CHECK(ds.records[0].behavior == 0);
    CHECK(ds.records[1].behavior == 1);
    CHECK(ds.behavior_id("buy") == 1);
    CHECK_THROWS_AS(ds.behavior_id("tag"), DataError);
}

TEST_CASE("parse errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse("1 2 view 10\n1 2\n"),
                         "line 2: expected 'user item behavior timestamp', "
                         "got '1 2'",
                         ParseError);
    CHECK_THROWS_WITH_AS(parse("1 2 view 10 extra\n"),
                         "line 1: trailing field 'extra'", ParseError);
    CHECK_THROWS_WITH_AS(parse("1 2 tag 10\n"),
                         "line 1: behavior 'tag' not in the vocabulary",
                         ParseError);
    CHECK_THROWS_WITH_AS(parse("x 2 view 10\n"), "line 1: bad user id 'x'",
                         ParseError);
    CHECK_THROWS_WITH_AS(parse("1 2 view 10h\n"),
                         "line 1: bad timestamp '10h'", ParseError);
    CHECK_THROWS_AS(parse("# only a comment\n"), DataError);
}

TEST_CASE("comments count toward line numbers") {
    CHECK_THROWS_WITH_AS(parse("# head\n\n1 2 tag 10\n"),
                         "line 3: behavior 'tag' not in the vocabulary",
                         ParseError);
}

TEST_CASE("write then reload reproduces the dataset") {
    Dataset ds = parse("50 900 view 10\n3 7 buy 20\n50 7 view 30\n");
    std::ostringstream out;
    write_dataset(out, ds);
    std::istringstream back(out.str());
    Dataset again = load_dataset(back, ds.behavior_labels);
    CHECK(again.records == ds.records);
    CHECK(again.user_ids == ds.user_ids);
    CHECK(again.item_ids == ds.item_ids);
}

TEST_CASE("behavior filter keeps the id tables") {
    Dataset ds = parse("1 2 view 10\n1 3 buy 20\n2 2 view 30\n");
    Dataset only = filter_to_behavior(ds, ds.behavior_id("buy"));
    REQUIRE(only.records.size() == 1);
    CHECK(only.records[0].behavior == 1);
    CHECK(only.user_ids == ds.user_ids);
    CHECK(only.item_ids == ds.item_ids);
    CHECK(only.behavior_count() == 2);
    Dataset none = parse("1 2 view 10\n");
    CHECK_THROWS_AS(filter_to_behavior(none, 1), DataError);
}

TEST_CASE("sequences sort by time and keep input order on ties") {
    Dataset ds = parse("1 10 view 30\n1 20 view 10\n1 30 buy 30\n"
                       "2 10 buy 5\n");
    auto seqs = build_sequences(ds);
    REQUIRE(seqs.size() == 2);
    const auto& r = seqs[0].records;
    REQUIRE(r.size() == 3);
    CHECK(ds.item_ids[static_cast<std::size_t>(r[0].item)] == 20);
    // 30-timestamp tie: the view came first in the input.
    CHECK(ds.item_ids[static_cast<std::size_t>(r[1].item)] == 10);
    CHECK(ds.item_ids[static_cast<std::size_t>(r[2].item)] == 30);
    CHECK(seqs[1].records.size() == 1);
}

TEST_CASE("window chunks keep the short tail") {
    Dataset ds = parse("1 1 view 1\n1 2 view 2\n1 3 view 3\n1 4 view 4\n"
                       "1 5 view 5\n1 6 view 6\n1 7 view 7\n"
                       "2 1 view 1\n2 2 view 2\n");
    auto subs = build_subsequences(build_sequences(ds), 3);
    REQUIRE(subs.size() == 4);
    CHECK(subs[0].records.size() == 3);
    CHECK(subs[1].records.size() == 3);
    CHECK(subs[2].records.size() == 1);
    CHECK(subs[3].records.size() == 2);
    for (std::size_t i = 0; i < subs.size(); ++i)
        CHECK(subs[i].id == static_cast<int>(i));
    CHECK(subs[0].ordinal == 0);
    CHECK(subs[1].ordinal == 1);
    CHECK(subs[2].ordinal == 2);
    CHECK(subs[3].user == 1);
    CHECK(subs[3].ordinal == 0);
    CHECK(subs[2].last_timestamp() == 7);
    CHECK_THROWS_AS(build_subsequences(build_sequences(ds), 0), ConfigError);
}

TEST_CASE("holdout takes the last target event of multi-target users") {
    Dataset ds = parse("1 10 buy 5\n1 20 buy 9\n1 30 view 12\n"
                       "2 10 buy 5\n"
                       "3 10 view 1\n3 20 view 2\n");
    auto split = leave_one_out(build_sequences(ds), ds.behavior_id("buy"));
    REQUIRE(split.test.size() == 1);
    const auto held = split.test.at(0);
    CHECK(ds.item_ids[static_cast<std::size_t>(held.item)] == 20);
    CHECK(held.timestamp == 9);
    // User 1 keeps the earlier buy and the later view.
    REQUIRE(split.train[0].records.size() == 2);
    CHECK(split.train[0].records[0].behavior == 1);
    CHECK(split.train[0].records[1].behavior == 0);
    // Single-target and no-target users keep everything.
    CHECK(split.train[1].records.size() == 1);
    CHECK(split.train[2].records.size() == 2);
}

TEST_CASE("holdout tie at the last timestamp takes the later record") {
    Dataset ds = parse("1 10 buy 7\n1 20 buy 7\n");
    auto split = leave_one_out(build_sequences(ds), ds.behavior_id("buy"));
    CHECK(ds.item_ids[static_cast<std::size_t>(split.test.at(0).item)] == 20);
    REQUIRE(split.train[0].records.size() == 1);
    CHECK(ds.item_ids[static_cast<std::size_t>(
              split.train[0].records[0].item)] == 10);
}

TEST_CASE("instances pair each window with the next later target") {
    // User 1 train events: buy@5 view@6 view@7 | buy@9 view@12 (window 3);
    // the held-out buy@20 never becomes a positive.
    Dataset ds = parse("1 10 buy 5\n1 11 view 6\n1 12 view 7\n"
                       "1 13 buy 9\n1 14 view 12\n1 15 buy 20\n");
    PreparedData pd = prepare_data(ds, "buy", 3);
    REQUIRE(pd.subsequences.size() == 2);
    REQUIRE(pd.instances.size() == 1);
    CHECK(pd.instances[0].subseq == 0);
    CHECK(pd.instances[0].user == 0);
    CHECK(ds.item_ids[static_cast<std::size_t>(pd.instances[0].positive)] ==
          13);
    // Held-out items still count as the user's target items.
    CHECK(pd.user_target_items[0].count(pd.split.test.at(0).item) == 1);
}

TEST_CASE("a window whose last event ties the next target gets no instance") {
    Dataset ds = parse("1 10 buy 5\n1 11 view 9\n1 12 view 9\n"
                       "1 13 buy 9\n1 14 buy 30\n");
    PreparedData pd = prepare_data(ds, "buy", 3);
    // Both windows end at t=9 and the only remaining buy is at t=9, which
    // is not strictly later, so nothing qualifies.
    CHECK(pd.instances.empty());
}

TEST_CASE("negatives avoid every target item and are seed-stable") {
    Dataset ds = parse("1 10 buy 1\n1 11 view 2\n1 12 buy 3\n1 13 buy 9\n"
                       "1 14 view 10\n1 15 view 11\n1 16 view 12\n");
    PreparedData pd = prepare_data(ds, "buy", 2);
    REQUIRE(!pd.instances.empty());
    fill_negatives(pd, 4, Rng(11).fork("negatives"));
    PreparedData again = prepare_data(ds, "buy", 2);
    fill_negatives(again, 4, Rng(11).fork("negatives"));
    for (std::size_t i = 0; i < pd.instances.size(); ++i) {
        const auto& inst = pd.instances[i];
        REQUIRE(inst.negatives.size() == 4);
        CHECK(inst.negatives == again.instances[i].negatives);
        for (int n : inst.negatives)
            CHECK(pd.user_target_items[static_cast<std::size_t>(inst.user)]
                      .count(n) == 0);
    }
}

TEST_CASE("negative sampling fails only when nothing is eligible") {
    Rng rng(3);
    std::unordered_set<int> all{0, 1, 2};
    CHECK_THROWS_AS(sample_negatives(1, 3, all, rng), DataError);
    std::unordered_set<int> most{0, 2};
    auto picks = sample_negatives(5, 3, most, rng);
    for (int p : picks) CHECK(p == 1);
}

TEST_CASE("synthetic corpus is seed-deterministic") {
    SyntheticConfig cfg;
    cfg.users = 20;
    cfg.items = 30;
    cfg.horizon = 40;
    cfg.preferred = 6;
    Dataset a = generate_synthetic(cfg);
    Dataset b = generate_synthetic(cfg);
    CHECK(a.records == b.records);
    CHECK(a.user_ids == b.user_ids);
    CHECK(a.item_ids == b.item_ids);
    cfg.seed = 8;
    Dataset c = generate_synthetic(cfg);
    CHECK(a.records != c.records);
}

TEST_CASE("synthetic labels and remapped ids are well-formed") {
    SyntheticConfig cfg;
    cfg.users = 15;
    cfg.items = 25;
    cfg.behaviors = 4;
    cfg.horizon = 30;
    cfg.preferred = 5;
    Dataset ds = generate_synthetic(cfg);
    REQUIRE(ds.behavior_labels ==
            std::vector<std::string>{"click", "view", "cart", "buy"});
    for (std::size_t i = 1; i < ds.user_ids.size(); ++i)
        CHECK(ds.user_ids[i - 1] < ds.user_ids[i]);
    for (std::size_t i = 1; i < ds.item_ids.size(); ++i)
        CHECK(ds.item_ids[i - 1] < ds.item_ids[i]);
    for (const auto& r : ds.records) {
        CHECK(r.user >= 0);
        CHECK(r.user < ds.user_count());
        CHECK(r.item >= 0);
        CHECK(r.item < ds.item_count());
        CHECK(r.behavior >= 0);
        CHECK(r.behavior < 4);
        CHECK(r.timestamp >= 0);
        CHECK(r.timestamp < cfg.horizon);
    }
}

TEST_CASE("every triggered target follows a context event on the same item") {
    SyntheticConfig cfg;
    cfg.users = 25;
    cfg.items = 40;
    cfg.horizon = 50;
    cfg.preferred = 8;
    cfg.kappa = 1.0;
    cfg.target_rate = 0.0;  // all targets must be triggered
    Dataset ds = generate_synthetic(cfg);
    const int target = ds.behavior_count() - 1;
    int targets = 0;
    for (const auto& r : ds.records) {
        if (r.behavior != target) continue;
        ++targets;
        bool preceded = false;
        for (const auto& c : ds.records) {
            if (c.user == r.user && c.item == r.item &&
                c.behavior != target && c.timestamp < r.timestamp &&
                c.timestamp >= r.timestamp - cfg.window) {
                preceded = true;
                break;
            }
        }
        CHECK(preceded);
    }
    CHECK(targets > 0);
}

TEST_CASE("the trigger probability drives the target volume") {
    SyntheticConfig cfg;
    cfg.users = 40;
    cfg.items = 50;
    cfg.horizon = 60;
    cfg.preferred = 10;
    cfg.target_rate = 0.002;
    auto count_targets = [](const Dataset& ds) {
        const int target = ds.behavior_count() - 1;
        int n = 0;
        for (const auto& r : ds.records) n += r.behavior == target;
        return n;
    };
    cfg.kappa = 0.0;
    const int base = count_targets(generate_synthetic(cfg));
    cfg.kappa = 0.6;
    const int boosted = count_targets(generate_synthetic(cfg));
    CHECK(boosted > 2 * (base + 1));
}
