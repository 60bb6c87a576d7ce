#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace tgt {

// Deterministic random stream with labeled sub-streams.
//
// All randomness in the system flows through this type. Streams are keyed,
// not sequential: fork("negatives", epoch) yields the same stream no matter
// how many draws happened on the parent. That keeps runs reproducible across
// platforms and lets a resumed run replay exactly the draws of an
// uninterrupted one.
//
// The generator is splitmix64. We avoid <random> distributions on purpose:
// their output sequences are implementation-defined, so two standard
// libraries given the same engine can produce different numbers.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Next 64 raw bits.
    std::uint64_t next();

    // Uniform double in [0, 1), 53 bits of precision.
    double real();

    // Uniform integer in [0, n). n must be positive. Unbiased via rejection.
    std::uint64_t below(std::uint64_t n);

    // Independent stream derived from this stream's seed and a label.
    // Does not consume or depend on draws made so far.
    Rng fork(std::string_view label) const;
    Rng fork(std::string_view label, std::uint64_t index) const;

    // Fisher-Yates shuffle, order fixed by this stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

}  // namespace tgt
