#include "tgt/temporal.hpp"

#include <cmath>
#include <string>

#include "tgt/errors.hpp"

namespace tgt {

std::int64_t TimeSlotMapper::slot(std::int64_t timestamp) const {
    if (granularity < 1)
        throw ConfigError("time granularity must be positive");
    if (timestamp < origin)
        throw DataError("timestamp " + std::to_string(timestamp) +
                        " precedes the time origin " +
                        std::to_string(origin));
    return (timestamp - origin) / granularity;
}

std::vector<double> base_time_code(std::int64_t slot, int dim) {
    if (dim < 1) throw ConfigError("time code dim must be positive");
    std::vector<double> out(static_cast<std::size_t>(2 * dim));
    const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
    const double s = static_cast<double>(slot);
    for (int l = 0; l < dim; ++l) {
        const double sin_freq =
            std::pow(10000.0, (2.0 * l) / static_cast<double>(dim));
        const double cos_freq =
            std::pow(10000.0, (2.0 * l + 1.0) / static_cast<double>(dim));
        out[static_cast<std::size_t>(2 * l)] = std::sin(s / sin_freq) * norm;
        out[static_cast<std::size_t>(2 * l + 1)] =
            std::cos(s / cos_freq) * norm;
    }
    return out;
}

Tensor time_code_matrix(const std::vector<std::int64_t>& slots, int dim) {
    if (slots.empty()) throw ShapeError("time_code_matrix: no slots");
    std::vector<double> values;
    values.reserve(slots.size() * static_cast<std::size_t>(2 * dim));
    for (std::int64_t s : slots) {
        auto code = base_time_code(s, dim);
        values.insert(values.end(), code.begin(), code.end());
    }
    return Tensor::from({static_cast<int>(slots.size()), 2 * dim},
                        std::move(values));
}

}  // namespace tgt
