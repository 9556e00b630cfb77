#pragma once

// Timestamp <-> time-token grid index.
//
// Relative mode splits [0, T] into N-1 equal intervals so that both the video
// start and the video end are grid points; index k stands for k*T/(N-1).
// Absolute mode gives one token per second, k stands for k seconds, and times
// past N-1 seconds saturate on the last token.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"

namespace dvcseq {

inline std::int32_t encode_time(double t, double duration, const TimeGrid& grid) {
    if (!std::isfinite(t)) fail(ErrorKind::invalid_input, "timestamp must be finite");
    if (!std::isfinite(duration) || duration <= 0.0) {
        fail(ErrorKind::invalid_input, "duration must be finite and positive");
    }
    grid.validate();
    const double last = static_cast<double>(grid.n - 1);
    double k = 0.0;
    if (grid.mode == TimeMode::relative) {
        k = std::floor(t / duration * last + 0.5);  // round half up
    } else {
        k = std::floor(t);
    }
    return static_cast<std::int32_t>(std::clamp(k, 0.0, last));
}

inline double decode_time(std::int32_t k, double duration, const TimeGrid& grid) {
    grid.validate();
    if (k < 0 || k >= grid.n) {
        fail(ErrorKind::invalid_input,
             "time index " + std::to_string(k) + " outside [0, " + std::to_string(grid.n) + ")");
    }
    if (grid.mode == TimeMode::absolute) return static_cast<double>(k);
    if (!std::isfinite(duration) || duration <= 0.0) {
        fail(ErrorKind::invalid_input, "duration must be finite and positive");
    }
    return static_cast<double>(k) * duration / static_cast<double>(grid.n - 1);
}

// Worst-case relative-mode rounding error.
inline double relative_quantization_bound(double duration, std::int32_t n) {
    return duration / (2.0 * static_cast<double>(n - 1));
}

}  // namespace dvcseq
