#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wgqed {

/// Collects non-fatal numerical events (clipping, coarse grids) for result metadata.
struct Diagnostics {
    std::vector<std::string> warnings;
    std::size_t clipped_negative = 0;  // values below -clip_tolerance forced to zero
    std::size_t clipped_tiny = 0;      // values in [-clip_tolerance, 0) forced to zero

    void warn(std::string message) {
        for (const auto& w : warnings)
            if (w == message) return;
        warnings.push_back(std::move(message));
    }

    void merge(const Diagnostics& other) {
        for (const auto& w : other.warnings) warn(w);
        clipped_negative += other.clipped_negative;
        clipped_tiny += other.clipped_tiny;
    }
};

inline double clip_nonnegative(double value, double tolerance, Diagnostics* diag) {
    if (value >= 0.0) return value;
    if (diag) {
        if (value < -tolerance) {
            ++diag->clipped_negative;
            diag->warn("negative correlation values below -" + std::to_string(tolerance) + " were clipped");
        } else {
            ++diag->clipped_tiny;
        }
    }
    return 0.0;
}

} // namespace wgqed
