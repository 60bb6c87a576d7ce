#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "tgt/errors.hpp"
#include "tgt/temporal.hpp"

using namespace tgt;

TEST_CASE("slot mapping floors against the origin") {
    TimeSlotMapper tm{3600, 7200};
    CHECK(tm.slot(7200) == 0);
    CHECK(tm.slot(7201) == 0);
    CHECK(tm.slot(10799) == 0);
    CHECK(tm.slot(10800) == 1);
    CHECK(tm.slot(7200 + 3600 * 41 + 5) == 41);
    CHECK_THROWS_AS(tm.slot(7199), DataError);
}

TEST_CASE("slot zero code alternates zero and inverse root") {
    auto code = base_time_code(0, 4);
    REQUIRE(code.size() == 8);
    for (int l = 0; l < 4; ++l) {
        CHECK(code[2 * l] == 0.0);
        CHECK(code[2 * l + 1] == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("hand-computed codes at slot 1 and slot 7") {
    // Frozen values from scalar evaluation of the sinusoid formula.
    auto c1 = base_time_code(1, 2);
    REQUIRE(c1.size() == 4);
    CHECK(c1[0] == doctest::Approx(0.5950098395293859).epsilon(1e-12));
    CHECK(c1[1] == doctest::Approx(0.7070714261421149).epsilon(1e-12));
    CHECK(c1[2] == doctest::Approx(7.071067800080362e-05).epsilon(1e-12));
    CHECK(c1[3] == doctest::Approx(0.7071067811861939).epsilon(1e-12));

    auto c7 = base_time_code(7, 3);
    REQUIRE(c7.size() == 6);
    CHECK(c7[0] == doctest::Approx(0.3793113896242695).epsilon(1e-12));
    CHECK(c7[1] == doctest::Approx(0.5471427670012268).epsilon(1e-12));
    CHECK(c7[2] == doctest::Approx(0.008706714089539044).epsilon(1e-12));
    CHECK(c7[3] == doctest::Approx(0.5773501277388157).epsilon(1e-12));
    CHECK(c7[4] == doctest::Approx(1.8758757934576787e-05).epsilon(1e-12));
    CHECK(c7[5] == doctest::Approx(0.5773502691889693).epsilon(1e-12));
}

TEST_CASE("codes are bounded by the scale factor") {
    for (std::int64_t s : {0, 1, 13, 999, 100000}) {
        for (int dim : {1, 2, 16}) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
            for (double v : base_time_code(s, dim)) {
                CHECK(v <= bound + 1e-15);
                CHECK(v >= -bound - 1e-15);
            }
        }
    }
}

TEST_CASE("codes separate nearby slots at width 16") {
    std::set<std::vector<double>> seen;
    for (std::int64_t s = 0; s <= 100; ++s)
        seen.insert(base_time_code(s, 16));
    CHECK(seen.size() == 101);
}

TEST_CASE("code matrix stacks per-slot codes") {
    Tensor m = time_code_matrix({0, 1}, 2);
    REQUIRE(m.shape() == std::vector<int>{2, 4});
    auto single = base_time_code(1, 2);
    for (int j = 0; j < 4; ++j) {
        CHECK(m.values()[static_cast<std::size_t>(j)] ==
              base_time_code(0, 2)[static_cast<std::size_t>(j)]);
        CHECK(m.values()[static_cast<std::size_t>(4 + j)] ==
              single[static_cast<std::size_t>(j)]);
    }
    CHECK_FALSE(m.node());
}

TEST_CASE("same slot means same code") {
    TimeSlotMapper tm{60, 0};
    CHECK(base_time_code(tm.slot(120), 5) == base_time_code(tm.slot(179), 5));
}
