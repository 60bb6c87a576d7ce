#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>
#include <utility>
#include <vector>

#include "tgt/data.hpp"
#include "tgt/errors.hpp"
#include "tgt/propagation.hpp"

using namespace tgt;

namespace {

Tensor t2(std::vector<int> shape, std::vector<double> v) {
    return Tensor::from(std::move(shape), std::move(v));
}

PreparedData tiny_prepared() {
    // Three users; user 30 has only context events, so it contributes
    // sub-sequences but no training instance.
    std::istringstream vocab("view\nbuy\n");
    std::istringstream data(
        "10 100 view 100\n"
        "10 101 buy 200\n"
        "10 100 view 300\n"
        "10 102 buy 400\n"
        "20 101 view 150\n"
        "20 102 buy 250\n"
        "30 100 view 50\n");
    Dataset ds = load_dataset(data, load_vocab(vocab));
    return prepare_data(ds, "buy", 2);
}

}  // namespace

TEST_CASE("graph slots follow global sub-sequence order") {
    PreparedData pd = tiny_prepared();
    BatchGraph g = build_graph(pd);

    REQUIRE(g.users == std::vector<int>{0, 1, 2});
    REQUIRE(g.slot_count() == static_cast<int>(pd.subsequences.size()));
    for (int s = 0; s < g.slot_count(); ++s) {
        CHECK(g.subseqs[static_cast<std::size_t>(s)] ==
              &pd.subsequences[static_cast<std::size_t>(s)]);
        CHECK(g.slot_for(s) == s);
        CHECK(g.user_of_slot[static_cast<std::size_t>(s)] ==
              pd.subsequences[static_cast<std::size_t>(s)].user);
    }
    // Per-user slot lists are chronological and partition the slots.
    int total = 0;
    for (std::size_t u = 0; u < g.user_slots.size(); ++u) {
        for (std::size_t i = 0; i + 1 < g.user_slots[u].size(); ++i)
            CHECK(g.user_slots[u][i] < g.user_slots[u][i + 1]);
        total += static_cast<int>(g.user_slots[u].size());
    }
    CHECK(total == g.slot_count());
}

TEST_CASE("item edges carry one entry per event") {
    PreparedData pd = tiny_prepared();
    BatchGraph g = build_graph(pd);
    REQUIRE(g.item_count == 3);

    std::vector<int> edge_counts(3, 0);
    int event_total = 0;
    for (const auto* ss : g.subseqs)
        event_total += static_cast<int>(ss->records.size());
    for (int it = 0; it < 3; ++it)
        edge_counts[static_cast<std::size_t>(it)] =
            static_cast<int>(g.item_edges[static_cast<std::size_t>(it)].size());
    CHECK(edge_counts[0] + edge_counts[1] + edge_counts[2] == event_total);
    // Item 100 (dense 0) is viewed twice by user 10 and once by user 30.
    CHECK(edge_counts[0] == 3);
    // Edges are slot-major.
    for (const auto& edges : g.item_edges)
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            CHECK(edges[i].first <= edges[i + 1].first);
}

TEST_CASE("a scoped graph rejects out-of-scope sub-sequences") {
    PreparedData pd = tiny_prepared();
    BatchGraph g = build_graph(pd, {0});
    REQUIRE(g.users == std::vector<int>{0});
    for (int s = 0; s < g.slot_count(); ++s)
        CHECK(g.subseqs[static_cast<std::size_t>(s)]->user == 0);
    int outside = -1;
    for (std::size_t i = 0; i < pd.subsequences.size(); ++i)
        if (pd.subsequences[i].user != 0) outside = static_cast<int>(i);
    REQUIRE(outside >= 0);
    CHECK_THROWS_AS(g.slot_for(outside), DataError);
    CHECK_THROWS_AS(g.slot_for(-1), DataError);
}

TEST_CASE("pooling sums rows that share a behavior") {
    Tensor enc = t2({3, 2}, {1, 2, 3, 4, 5, 6});
    PooledByBehavior pooled = pool_by_behavior(enc, {0, 1, 0}, false);
    REQUIRE(pooled.behaviors == std::vector<int>{0, 1});
    CHECK(pooled.rows[0].values() == std::vector<double>{6, 8});
    CHECK(pooled.rows[1].values() == std::vector<double>{3, 4});

    PooledByBehavior mean = pool_by_behavior(enc, {0, 1, 0}, true);
    CHECK(mean.rows[0].values() == std::vector<double>{3, 4});
    CHECK(mean.rows[1].values() == std::vector<double>{3, 4});

    CHECK_THROWS_AS(pool_by_behavior(enc, {0, 1}, false), ShapeError);
}

TEST_CASE("behavior transform matches the frozen gate evaluation") {
    ChannelParams cp;
    cp.bases = t2({2, 4}, {1, 2, 3, 4, -1, 0, 0.5, 1});
    cp.gate_weight = t2({2, 2}, {1, 0, 0.5, -0.5});
    cp.gate_bias = t2({2, 1}, {0.25, 0});
    Tensor embed = t2({1, 2}, {0.2, 0.4});

    Tensor gate;
    Tensor w = behavior_transform(embed, cp, 2, &gate);
    REQUIRE(w.shape() == std::vector<int>{2, 2});
    REQUIRE(gate.shape() == std::vector<int>{2, 1});
    CHECK(gate.values()[0] ==
          doctest::Approx(0.6341355910108007).epsilon(1e-12));
    CHECK(gate.values()[1] ==
          doctest::Approx(0.3658644089891993).epsilon(1e-12));
    const std::vector<double> want{0.26827118202160144, 1.2682711820216015,
                                   2.0853389775270017, 2.902406773032402};
    for (int i = 0; i < 4; ++i)
        CHECK(w.values()[static_cast<std::size_t>(i)] ==
              doctest::Approx(want[static_cast<std::size_t>(i)])
                  .epsilon(1e-12));
}

TEST_CASE("behavior transform gates sum to one") {
    ChannelParams cp;
    cp.bases = t2({3, 4}, {1, 0, 0, 1, 0, 1, 1, 0, 2, 2, 2, 2});
    cp.gate_weight = t2({3, 2}, {5, -2, 0.1, 0.3, -4, 4});
    cp.gate_bias = t2({3, 1}, {1, 0, -1});
    Tensor gate;
    behavior_transform(t2({1, 2}, {0.9, -1.7}), cp, 2, &gate);
    double total = 0.0;
    for (double v : gate.values()) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cross type attention matches the frozen evaluation") {
    CrossTypeParams p;
    p.weight = t2({2, 2}, {0.5, -0.25, 1, 0.75});
    p.bias = t2({1, 2}, {0.1, -0.2});
    Tensor stack = t2({2, 2}, {1, -0.5, 0.25, 2});

    CrossTypeResult r = cross_type_attention(stack, p);
    REQUIRE(r.weights.shape() == std::vector<int>{2, 1});
    REQUIRE(r.combined.shape() == std::vector<int>{1, 2});
    CHECK(r.weights.values()[0] ==
          doctest::Approx(0.5343209436693046).epsilon(1e-12));
    CHECK(r.weights.values()[1] ==
          doctest::Approx(0.46567905633069534).epsilon(1e-12));
    CHECK(r.combined.values()[0] ==
          doctest::Approx(0.6507407077519785).epsilon(1e-12));
    CHECK(r.combined.values()[1] ==
          doctest::Approx(0.6641976408267384).epsilon(1e-12));
}

TEST_CASE("cross type attention over one row is the row itself") {
    CrossTypeParams p;
    p.weight = t2({2, 2}, {3, 1, -2, 0.5});
    p.bias = t2({1, 2}, {0.7, 0.7});
    Tensor stack = t2({1, 2}, {4.5, -1.25});
    CrossTypeResult r = cross_type_attention(stack, p);
    CHECK(r.weights.values()[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.combined.values()[0] == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(r.combined.values()[1] == doctest::Approx(-1.25).epsilon(1e-14));
}

TEST_CASE("user aggregation matches the frozen evaluation") {
    Tensor xs = t2({2, 2}, {1, 0.5, -0.25, 1.5});
    Tensor prev = t2({1, 2}, {0.5, -1});

    UserAggResult soft = aggregate_user(xs, prev, true);
    CHECK(soft.weights.values()[0] ==
          doctest::Approx(0.8354835371034369).epsilon(1e-12));
    CHECK(soft.weights.values()[1] ==
          doctest::Approx(0.1645164628965632).epsilon(1e-12));
    CHECK(soft.user.values()[0] ==
          doctest::Approx(0.7943544213792961).epsilon(1e-12));
    CHECK(soft.user.values()[1] ==
          doctest::Approx(0.6645164628965632).epsilon(1e-12));

    // Raw mode keeps the dot products as weights: scores are 0 and -1.625,
    // so the pooled row is -1.625 * x1 and the ReLU clips its first entry.
    UserAggResult raw = aggregate_user(xs, prev, false);
    CHECK(raw.weights.values()[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(raw.weights.values()[1] == doctest::Approx(-1.625).epsilon(1e-14));
    CHECK(raw.user.values()[0] ==
          doctest::Approx(0.40625).epsilon(1e-12));
    CHECK(raw.user.values()[1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("layer combination sums elementwise") {
    std::vector<Tensor> layers{t2({2, 2}, {1, 2, 3, 4}),
                               t2({2, 2}, {10, 20, 30, 40}),
                               t2({2, 2}, {0.5, 0.5, 0.5, 0.5})};
    Tensor sum = combine_layers(layers);
    CHECK(sum.values() == std::vector<double>{11.5, 22.5, 33.5, 44.5});
    CHECK_THROWS_AS(combine_layers({}), ShapeError);
}

TEST_CASE("constant rows") {
    CHECK(ones_row(3).values() == std::vector<double>{1, 1, 1});
    CHECK(ones_row(3).shape() == std::vector<int>{1, 3});
    Tensor r = ratio_row({3, 1});
    CHECK(r.values()[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(r.values()[1] == doctest::Approx(0.25).epsilon(1e-14));
}
