#pragma once

#include <cstdint>
#include <vector>

#include "tgt/tensor.hpp"

namespace tgt {

// Timestamps to discrete slots: slot = (t - origin) / granularity.
// Timestamps before the origin are refused so slots stay non-negative.
struct TimeSlotMapper {
    std::int64_t granularity = 3600;
    std::int64_t origin = 0;
    std::int64_t slot(std::int64_t timestamp) const;
};

// Fixed sinusoidal code for one slot. For l in [0, dim):
//   entry 2l   = sin(slot / 10000^(2l / dim))   / sqrt(dim)
//   entry 2l+1 = cos(slot / 10000^((2l+1)/dim)) / sqrt(dim)
// so the result has 2*dim entries.
std::vector<double> base_time_code(std::int64_t slot, int dim);

// [count x 2*dim] constant tensor of codes for a list of slots.
Tensor time_code_matrix(const std::vector<std::int64_t>& slots, int dim);

}  // namespace tgt
