#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tgt/data.hpp"
#include "tgt/errors.hpp"
#include "tgt/model.hpp"
#include "tgt/propagation.hpp"
#include "tgt/temporal.hpp"

using namespace tgt;

namespace {

PreparedData small_prepared() {
    std::istringstream vocab("view\ncart\nbuy\n");
    std::ostringstream data;
    // Three users, six events each, hourly steps; items cycle over five.
    for (int u = 0; u < 3; ++u) {
        for (int k = 0; k < 6; ++k) {
            const char* label = (k % 2 == 1) ? "buy" : (k % 4 == 0 ? "view"
                                                                   : "cart");
            data << (u + 1) * 10 << ' ' << 100 + (u + 2 * k) % 5 << ' '
                 << label << ' ' << 3600 * k << '\n';
        }
    }
    std::istringstream in(data.str());
    Dataset ds = load_dataset(in, load_vocab(vocab));
    return prepare_data(ds, "buy", 3);
}

ModelConfig small_config() {
    ModelConfig mc;
    mc.dim = 8;
    mc.layers = 2;
    mc.heads = 2;
    mc.channels = 2;
    mc.window = 3;
    return mc;
}

Model make_model(const ModelConfig& mc, const PreparedData& pd,
                 std::uint64_t seed = 11) {
    return Model(mc, pd.data.user_count(), pd.data.item_count(),
                 pd.data.behavior_count(), Rng(seed));
}

bool all_finite(const Tensor& t) {
    for (double v : t.values())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

TEST_CASE("the parameter list does not depend on the configuration") {
    PreparedData pd = small_prepared();
    ModelConfig base = small_config();
    Model ref = make_model(base, pd);

    std::vector<std::string> names;
    for (const auto& [name, t] : ref.parameters()) names.push_back(name);
    CHECK(names.size() >= 10);
    CHECK(std::set<std::string>(names.begin(), names.end()).size() ==
          names.size());

    for (int variant = 0; variant < 6; ++variant) {
        ModelConfig mc = small_config();
        if (variant == 0) mc.context_off = true;
        if (variant == 1) mc.sequence_off = true;
        if (variant == 2) mc.multichannel_off = true;
        if (variant == 3) mc.global_off = true;
        if (variant == 4) mc.concat_agg = true;
        if (variant == 5) mc.frequency_agg = true;
        Model m = make_model(mc, pd);
        REQUIRE(m.parameters().size() == names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            CHECK(m.parameters()[i].first == names[i]);
            CHECK(m.parameters()[i].second.shape() ==
                  ref.parameters()[i].second.shape());
        }
    }
}

TEST_CASE("initialization is a pure function of the seed") {
    PreparedData pd = small_prepared();
    Model a = make_model(small_config(), pd, 42);
    Model b = make_model(small_config(), pd, 42);
    Model c = make_model(small_config(), pd, 43);
    bool differs = false;
    for (std::size_t i = 0; i < a.parameters().size(); ++i) {
        CHECK(a.parameters()[i].second.values() ==
              b.parameters()[i].second.values());
        if (a.parameters()[i].second.values() !=
            c.parameters()[i].second.values())
            differs = true;
    }
    CHECK(differs);
}

TEST_CASE("forward is deterministic and fully finite") {
    PreparedData pd = small_prepared();
    Model m = make_model(small_config(), pd);
    BatchGraph g = build_graph(pd);
    TimeSlotMapper tm{3600, 0};

    ForwardResult r1 = m.forward(g, tm);
    ForwardResult r2 = m.forward(g, tm);
    CHECK(r1.users.values() == r2.users.values());
    CHECK(r1.subusers.values() == r2.subusers.values());
    CHECK(r1.items.values() == r2.items.values());

    REQUIRE(r1.users.shape() ==
            std::vector<int>{static_cast<int>(g.users.size()), 8});
    REQUIRE(r1.subusers.shape() == std::vector<int>{g.slot_count(), 8});
    REQUIRE(r1.items.shape() == std::vector<int>{pd.data.item_count(), 8});
    CHECK(all_finite(r1.users));
    CHECK(all_finite(r1.subusers));
    CHECK(all_finite(r1.items));
}

TEST_CASE("every configuration variant completes a forward pass") {
    PreparedData pd = small_prepared();
    BatchGraph g = build_graph(pd);
    TimeSlotMapper tm{3600, 0};

    for (int variant = 0; variant < 9; ++variant) {
        ModelConfig mc = small_config();
        if (variant == 1) mc.context_off = true;
        if (variant == 2) mc.sequence_off = true;
        if (variant == 3) mc.multichannel_off = true;
        if (variant == 4) mc.global_off = true;
        if (variant == 5) mc.concat_agg = true;
        if (variant == 6) mc.frequency_agg = true;
        if (variant == 7) mc.eta_softmax = false;
        if (variant == 8) mc.mean_pool = true;
        CAPTURE(variant);
        Model m = make_model(mc, pd);
        ForwardResult r = m.forward(g, tm);
        CHECK(all_finite(r.users));
        CHECK(all_finite(r.subusers));
        CHECK(all_finite(r.items));
    }
}

TEST_CASE("ablations change the outputs they bypass") {
    PreparedData pd = small_prepared();
    BatchGraph g = build_graph(pd);
    TimeSlotMapper tm{3600, 0};
    ForwardResult base = make_model(small_config(), pd).forward(g, tm);

    for (int variant = 0; variant < 6; ++variant) {
        ModelConfig mc = small_config();
        if (variant == 0) mc.context_off = true;
        if (variant == 1) mc.sequence_off = true;
        if (variant == 2) mc.multichannel_off = true;
        if (variant == 3) mc.global_off = true;
        if (variant == 4) mc.concat_agg = true;
        if (variant == 5) mc.frequency_agg = true;
        CAPTURE(variant);
        ForwardResult r = make_model(mc, pd).forward(g, tm);
        CHECK(r.subusers.values() != base.subusers.values());
    }
}

TEST_CASE("diagnostics expose per-slot and per-user attention") {
    PreparedData pd = small_prepared();
    Model m = make_model(small_config(), pd);
    BatchGraph g = build_graph(pd);
    TimeSlotMapper tm{3600, 0};

    ForwardResult r = m.forward(g, tm);
    REQUIRE(r.gamma.size() == static_cast<std::size_t>(g.slot_count()));
    for (int s = 0; s < g.slot_count(); ++s) {
        const auto& row = r.gamma[static_cast<std::size_t>(s)];
        REQUIRE(row.size() == static_cast<std::size_t>(m.behavior_count()));
        std::set<int> present;
        for (const auto& rec : g.subseqs[static_cast<std::size_t>(s)]->records)
            present.insert(rec.behavior);
        double total = 0.0;
        for (int b = 0; b < m.behavior_count(); ++b) {
            if (!present.count(b))
                CHECK(row[static_cast<std::size_t>(b)] == 0.0);
            total += row[static_cast<std::size_t>(b)];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }

    REQUIRE(r.eta.size() == g.users.size());
    for (std::size_t u = 0; u < g.users.size(); ++u) {
        REQUIRE(r.eta[u].size() == g.user_slots[u].size());
        double total = 0.0;
        for (double w : r.eta[u]) total += w;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("concat aggregation reports no per-behavior weights") {
    PreparedData pd = small_prepared();
    ModelConfig mc = small_config();
    mc.concat_agg = true;
    Model m = make_model(mc, pd);
    BatchGraph g = build_graph(pd);
    ForwardResult r = m.forward(g, TimeSlotMapper{3600, 0});
    for (const auto& row : r.gamma)
        for (double w : row) CHECK(w == 0.0);
}

TEST_CASE("every softmax row in the pass sums to one") {
    PreparedData pd = small_prepared();
    Model m = make_model(small_config(), pd);
    BatchGraph g = build_graph(pd);
    std::vector<Tensor> sink;
    m.forward(g, TimeSlotMapper{3600, 0}, &sink);
    CHECK(sink.size() > 0);
    for (const auto& t : sink) {
        REQUIRE(t.rank() == 2);
        // Column softmaxes are [n x 1]; row softmaxes are [r x c].
        if (t.dim(1) == 1) {
            double total = 0.0;
            for (double v : t.values()) total += v;
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        } else {
            for (int r = 0; r < t.dim(0); ++r) {
                double total = 0.0;
                for (int c = 0; c < t.dim(1); ++c)
                    total += t.values()[static_cast<std::size_t>(
                        r * t.dim(1) + c)];
                CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("unknown parameter names are refused") {
    PreparedData pd = small_prepared();
    Model m = make_model(small_config(), pd);
    CHECK_THROWS_AS(m.param("no_such_parameter"), ConfigError);
    CHECK(m.param("item_embeddings").dim(0) == pd.data.item_count());
}

TEST_CASE("dimension must split across heads and time code") {
    RunConfig rc;
    config_set(rc, "model.dim", "10");
    config_set(rc, "model.attention_heads", "4");
    CHECK_THROWS_AS(validate_config(rc), ConfigError);
}
