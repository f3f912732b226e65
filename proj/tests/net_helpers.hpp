#pragma once

// Network fixtures shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cstdint>
#include <memory>

#include "crossfuse/gradcheck.hpp"
#include "crossfuse/network.hpp"
#include "crossfuse/ops.hpp"
#include "oracles.hpp"

namespace testing {

using namespace crossfuse;

inline LabelMap random_labels(int n, int h, int w, RngState& rng, double ignore_rate = 0.1)
{
    LabelMap m(n, h, w);
    for (std::uint8_t& v : m.data) {
        v = rng.uniform() < ignore_rate ? kIgnoreLabel : static_cast<std::uint8_t>(rng.below(2));
    }
    return m;
}

/// A valid spec with random width, classes, layer widths and kernel sizes.
inline NetworkSpec random_valid_spec(RngState& rng)
{
    const int d = 1 + static_cast<int>(rng.below(6));
    const int classes = 2 + static_cast<int>(rng.below(3));
    NetworkSpec s = default_spec(d, classes);
    auto odd_kernel = [&](LayerSpec& l) {
        const int k = rng.below(2) == 0 ? 3 : 5;
        l.kernel_h = k;
        l.kernel_w = rng.below(2) == 0 ? k : 3;
        l.pad_h = (l.kernel_h - 1) / 2;
        l.pad_w = (l.kernel_w - 1) / 2;
    };
    // First layer: 4x4 or 6x6 stride-2 kernels both halve the extent.
    if (rng.below(2) == 1) {
        s.layer(1).kernel_h = s.layer(1).kernel_w = 6;
        s.layer(1).pad_h = s.layer(1).pad_w = 2;
    }
    for (int i : {2, 4, 16, 18, 20, 21}) {
        odd_kernel(s.layer(i));
    }
    auto width = [&](int i, int w) {
        s.layer(i).out_channels = w;
        s.layer(i + 1).in_channels = w;
    };
    width(2, 1 + static_cast<int>(rng.below(8)));
    width(3, 1 + static_cast<int>(rng.below(8)));
    width(4, 1 + static_cast<int>(rng.below(8)));
    for (int i = 15; i <= 20; ++i) {
        width(i, 1 + static_cast<int>(rng.below(8)));
    }
    return s;
}

/// Copies layer weights [first, last] (1-based; last = 0 means the end of dst's branch).
inline void copy_branch(const FusionNetwork& src, int src_branch, FusionNetwork& dst, int dst_branch, int first = 1,
                        int last = 0)
{
    std::vector<Layer>& to = dst.branch(dst_branch);
    const std::vector<Layer>& from = src.branch(src_branch);
    if (last == 0) {
        last = static_cast<int>(to.size());
    }
    for (int i = first; i <= last; ++i) {
        to.at(static_cast<std::size_t>(i - 1)).params().weights = from.at(static_cast<std::size_t>(i - 1)).params().weights;
        to.at(static_cast<std::size_t>(i - 1)).params().bias = from.at(static_cast<std::size_t>(i - 1)).params().bias;
    }
}

/// Finite-difference check of a whole network in training mode: dropout masks
/// are redrawn from the same seed on every evaluation so the loss stays a
/// pure function of the parameters. Cross scalars are set away from zero so
/// every path carries signal. Input gradients are probed as well.
inline GradCheckReport check_network_gradients(FusionMode mode, int n, int d, int h, int w, std::uint64_t seed,
                                               std::size_t max_entries, double tolerance = 1e-6)
{
    RngState rng(seed);
    auto net = std::make_shared<FusionNetwork>(build_network(mode, Modality::zyx, default_spec(d, 2), rng));
    if (CrossFusionParams* c = net->cross()) {
        for (std::size_t j = 0; j < c->a.size(); ++j) {
            c->a[j] = rng.uniform(-0.5, 0.5);
            c->b[j] = rng.uniform(-0.5, 0.5);
        }
    }
    auto rgb = std::make_shared<Tensor>(oracle::random_tensor(Shape{n, 3, h, w}, rng));
    auto zyx = std::make_shared<Tensor>(oracle::random_tensor(Shape{n, 3, h, w}, rng));
    rgb->ensure_grad();
    zyx->ensure_grad();
    const LabelMap labels = random_labels(n, h, w, rng);
    const std::uint64_t drop_seed = seed ^ 0x5bd1e995ULL;

    GradCheckTarget t;
    t.loss = [=] {
        RngState drop(drop_seed);
        return softmax_cross_entropy(net->forward({rgb.get(), zyx.get()}, true, drop, false), labels).loss;
    };
    t.backward = [=] {
        RngState drop(drop_seed);
        net->zero_grad();
        const LossResult r = softmax_cross_entropy(net->forward({rgb.get(), zyx.get()}, true, drop), labels);
        const InputGrads g = net->backward(r.grad);
        auto put = [](const Tensor& src, Tensor& dst) {
            std::fill(dst.grad().begin(), dst.grad().end(), 0.0);
            if (!src.empty()) {
                std::copy(src.values().begin(), src.values().end(), dst.grad().begin());
            }
        };
        put(g.rgb, *rgb);
        put(g.zyx, *zyx);
    };
    t.params = net->parameters();
    if (net->requires_rgb()) {
        t.params.push_back({"input.rgb", rgb->data(), rgb->grad(), false});
    }
    if (net->requires_zyx()) {
        t.params.push_back({"input.zyx", zyx->data(), zyx->grad(), false});
    }
    GradCheckOptions opt;
    opt.max_entries_per_param = max_entries;
    return gradient_check(t, tolerance, opt);
}

}  // namespace testing
