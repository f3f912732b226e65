#include "crossfuse/densify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crossfuse/errors.hpp"

namespace crossfuse {

double DenseZyxImage::fill_rate() const
{
    if (fill.empty()) {
        return 0.0;
    }
    const auto filled = std::count_if(fill.begin(), fill.end(),
                                      [](FillState s) { return s != FillState::unfilled; });
    return static_cast<double>(filled) / static_cast<double>(fill.size());
}

DenseZyxImage densify(const SparseZyxImage& img, const DensifyOptions& options)
{
    if (options.window < 3 || options.window % 2 == 0) {
        throw DomainError("densify: window must be odd and >= 3, got " + std::to_string(options.window));
    }
    if (!(options.power > 0.0)) {
        throw DomainError("densify: power must be positive");
    }
    const int r = options.window / 2;

    // Weight table indexed by (dy + r, dx + r); the center is never used.
    std::vector<double> weight(static_cast<std::size_t>(options.window) * options.window, 0.0);
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (dx == 0 && dy == 0) {
                continue;
            }
            const double d = std::sqrt(static_cast<double>(dx * dx + dy * dy));
            weight[static_cast<std::size_t>(dy + r) * options.window + (dx + r)] = 1.0 / std::pow(d, options.power);
        }
    }

    DenseZyxImage out;
    out.width = img.width;
    out.height = img.height;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    out.z.assign(n, 0.0);
    out.y.assign(n, 0.0);
    out.x.assign(n, 0.0);
    out.fill.assign(n, FillState::unfilled);

    for (int row = 0; row < img.height; ++row) {
        for (int col = 0; col < img.width; ++col) {
            const std::size_t idx = img.index(col, row);
            if (img.mask[idx] != 0) {
                out.z[idx] = img.z[idx];
                out.y[idx] = img.y[idx];
                out.x[idx] = img.x[idx];
                out.fill[idx] = FillState::measured;
                continue;
            }
            // Accumulate offsets from the first neighbor so that a single
            // neighbor (or a constant window) reproduces its value exactly.
            double wsum = 0.0;
            double acc[3] = {0.0, 0.0, 0.0};
            double ref[3] = {0.0, 0.0, 0.0};
            double lo[3] = {0.0, 0.0, 0.0};
            double hi[3] = {0.0, 0.0, 0.0};
            const int y0 = std::max(0, row - r);
            const int y1 = std::min(img.height - 1, row + r);
            const int x0 = std::max(0, col - r);
            const int x1 = std::min(img.width - 1, col + r);
            for (int yy = y0; yy <= y1; ++yy) {
                const double* wrow = weight.data() + static_cast<std::size_t>(yy - row + r) * options.window;
                for (int xx = x0; xx <= x1; ++xx) {
                    const std::size_t j = img.index(xx, yy);
                    if (img.mask[j] == 0) {
                        continue;
                    }
                    const double v[3] = {img.z[j], img.y[j], img.x[j]};
                    if (wsum == 0.0) {
                        for (int c = 0; c < 3; ++c) {
                            ref[c] = lo[c] = hi[c] = v[c];
                        }
                    }
                    const double w = wrow[xx - col + r];
                    wsum += w;
                    for (int c = 0; c < 3; ++c) {
                        acc[c] += w * (v[c] - ref[c]);
                        lo[c] = std::min(lo[c], v[c]);
                        hi[c] = std::max(hi[c], v[c]);
                    }
                }
            }
            if (wsum > 0.0) {
                double value[3];
                for (int c = 0; c < 3; ++c) {
                    value[c] = std::clamp(ref[c] + acc[c] / wsum, lo[c], hi[c]);
                }
                out.z[idx] = value[0];
                out.y[idx] = value[1];
                out.x[idx] = value[2];
                out.fill[idx] = FillState::interpolated;
            }
        }
    }
    return out;
}

}  // namespace crossfuse
