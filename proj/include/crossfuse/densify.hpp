#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "crossfuse/geometry.hpp"

namespace crossfuse {

/// Per-pixel origin of a dense ZYX value.
enum class FillState : std::uint8_t {
    unfilled = 0,      // no masked neighbor in the window; channels are 0
    measured = 1,      // a LIDAR point landed here
    interpolated = 2,  // inverse-distance average of masked neighbors
};

struct DenseZyxImage {
    int width = 0;
    int height = 0;
    std::vector<double> z;
    std::vector<double> y;
    std::vector<double> x;
    std::vector<FillState> fill;

    std::size_t index(int col, int row) const
    {
        return static_cast<std::size_t>(row) * width + col;
    }
    /// Fraction of pixels that are measured or interpolated.
    double fill_rate() const;
};

struct DensifyOptions {
    int window = 11;
    double power = 2.0;
};

/// Windowed inverse-distance weighting of the masked pixels, per channel.
///
/// Weights are 1/d^power with d the Euclidean pixel distance; masked pixels are
/// copied through unchanged. Throws DomainError for an even or < 3 window or a
/// non-positive power.
DenseZyxImage densify(const SparseZyxImage& img, const DensifyOptions& options = {});

}  // namespace crossfuse
