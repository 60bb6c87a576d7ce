#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgt/data.hpp"
#include "tgt/model.hpp"

namespace tgt {

struct GradCheckOptions {
    int dim = 8;
    int layers = 2;
    int heads = 2;
    int channels = 2;
    int users = 3;
    int behaviors = 2;
    int window = 3;
    double eps = 1e-5;
    double lambda = 0.005;
    std::uint64_t seed = 7;
};

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> params;  // model parameter order
    double max_rel_err = 0.0;
    std::string worst_param;
};

// Hand-built corpus exercising every code path: each user interacts six
// times on an hourly grid, context and target behaviors interleaved, so the
// split leaves two sub-sequences per user and one training instance each.
PreparedData gradcheck_corpus(int users, int behaviors, int window);

// Central-difference check of the full training loss against the recorded
// gradients, parameter by parameter. λ > 0 keeps every parameter in play,
// including ones the active configuration never touches.
GradCheckReport run_gradient_check(const GradCheckOptions& opt);

}  // namespace tgt
