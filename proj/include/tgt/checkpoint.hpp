#pragma once

#include <cstdint>
#include <string>

#include "tgt/model.hpp"
#include "tgt/training.hpp"

namespace tgt {

// Training progress carried alongside the weights so a run can resume.
struct CheckpointExtra {
    std::int64_t next_epoch = 0;
};

/// Binary layout, all integers little-endian:
//   "TGT1", u32 parameter count, then per parameter:
//     u32 name length, UTF-8 name, u32 rank, u32 dims..., f64 values.
//   Optimizer state follows under an "OPT1" sentinel with the same record
//   scheme (adam.m.<param>, adam.v.<param>, adam.step, train.next_epoch).
// The round trip is bitwise lossless.
void save_checkpoint(const std::string& path, const Model& model,
                     const Adam* adam = nullptr,
                     const CheckpointExtra* extra = nullptr);

// The model must already have the right architecture; names and shapes are
// checked. DataError on bad magic, mismatches or truncation (with the byte
// offset). A checkpoint without optimizer state loads fine when `adam` is
// null; asking for optimizer state that isn't there is an error.
void load_checkpoint(const std::string& path, Model& model,
                     Adam* adam = nullptr, CheckpointExtra* extra = nullptr);

}  // namespace tgt
