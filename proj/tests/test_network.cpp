#include "doctest.h"

#include <algorithm>

#include "crossfuse/errors.hpp"
#include "crossfuse/gradcheck.hpp"
#include "crossfuse/network.hpp"
#include "net_helpers.hpp"
#include "oracles.hpp"

using namespace crossfuse;

TEST_CASE("default spec layout")
{
    const NetworkSpec s = default_spec();
    REQUIRE(s.layers.size() == 21);
    CHECK_NOTHROW(validate_spec(s, 3));
    CHECK(downsampling_factor(s) == 8);
    int transposed = 0;
    for (const LayerSpec& l : s.layers) {
        transposed += l.kind == LayerKind::transposed_conv;
        CHECK(l.has_elu == (l.index != 21));
        CHECK((l.dropout_p == 0.25) == (l.index >= 6 && l.index <= 14));
    }
    CHECK(transposed == 3);
    for (int i = 6; i <= 14; ++i) {
        CHECK(s.layer(i).out_channels == 128);
        CHECK(s.layer(i).kernel_h == (i == 14 ? 1 : 3));
    }
    for (int i : {1, 3, 5}) {
        CHECK(s.layer(i).kernel_h == 4);
        CHECK(s.layer(i).stride == 2);
    }
}

TEST_CASE("context module receptive field")
{
    const NetworkSpec s = default_spec();
    const auto seq = receptive_field_sequence(s, 6, 14);
    const long want_h[] = {3, 5, 7, 11, 19, 35, 67, 69, 69};
    const long want_w[] = {3, 5, 9, 17, 33, 65, 129, 131, 131};
    REQUIRE(seq.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(seq[i].h == want_h[i]);
        CHECK(seq[i].w == want_w[i]);
    }
    CHECK(receptive_field(s, 6, 14) == ReceptiveField{69, 131});
    CHECK(receptive_field(s, 2, 2) == ReceptiveField{3, 3});
    CHECK(receptive_field(s, 1, 1) == ReceptiveField{4, 4});
    // Layer 1 (k4 s2) then layer 2 (k3): 4 + 2 * 2.
    CHECK(receptive_field(s, 1, 2) == ReceptiveField{8, 8});
}

TEST_CASE("spec validation names the offending layer")
{
    NetworkSpec s = default_spec();
    s.layer(9).dilation_w = 3;
    CHECK_THROWS_WITH_AS(validate_spec(s, 3), doctest::Contains("layer 9"), SpecError);

    s = default_spec();
    s.layer(3).dropout_p = 0.25;
    CHECK_THROWS_WITH_AS(validate_spec(s, 3), doctest::Contains("layer 3"), SpecError);

    s = default_spec();
    s.layer(16).in_channels = 7;
    CHECK_THROWS_WITH_AS(validate_spec(s, 3), doctest::Contains("layer 16"), SpecError);

    s = default_spec();
    s.layer(17).kind = LayerKind::strided_conv;
    CHECK_THROWS_AS(validate_spec(s, 3), SpecError);

    s = default_spec();
    s.layers.pop_back();
    CHECK_THROWS_AS(validate_spec(s, 3), SpecError);

    s = default_spec();
    s.layer(21).out_channels = 3;
    CHECK_THROWS_AS(validate_spec(s, 3), SpecError);
}

TEST_CASE("default parameter counts and identities")
{
    const NetworkSpec s = default_spec(32, 2);
    const std::size_t base = build_base(3, s).parameter_count();
    CHECK(base == 1645314);
    CHECK(build_early(s).parameter_count() - base == 1536);
    CHECK(build_cross(s).parameter_count() == 2 * base + 40);
    CHECK(build_late(s).parameter_count() == 2 * base - 2);
    CHECK(CrossFusionParams{}.parameter_count() == 40);

    std::size_t by_layer = 0;
    for (const LayerSpec& l : s.layers) {
        by_layer += l.parameter_count();
    }
    CHECK(by_layer == base);
}

TEST_CASE("identities hold for randomized specs")
{
    RngState rng(2718);
    for (int trial = 0; trial < 3; ++trial) {
        const NetworkSpec s = testing::random_valid_spec(rng);
        CAPTURE(trial);
        REQUIRE_NOTHROW(validate_spec(s, 3));
        const long base = static_cast<long>(build_base(3, s).parameter_count());
        const long first = static_cast<long>(s.layer(1).kernel_h) * s.layer(1).kernel_w * s.first_layer_feature_maps;
        CHECK(static_cast<long>(build_early(s).parameter_count()) - base == 3 * first);
        CHECK(static_cast<long>(build_cross(s).parameter_count()) == 2 * base + 40);
        CHECK(static_cast<long>(build_late(s).parameter_count()) == 2 * base - s.num_classes);
    }
}

TEST_CASE("mode-dependent structure")
{
    const NetworkSpec s = default_spec(2, 2);
    const FusionNetwork single = build_base(3, s);
    CHECK(single.branch_count() == 1);
    CHECK(single.cross() == nullptr);
    CHECK(single.late_fusion() == nullptr);
    const FusionNetwork late = build_late(s);
    CHECK(late.branch_count() == 2);
    CHECK(late.branch(0).size() == 20);
    CHECK(late.late_fusion() != nullptr);
    CHECK(late.late_fusion()->spec().in_channels == 2 * s.layer(20).out_channels);
    const FusionNetwork cross = build_cross(s);
    CHECK(cross.branch_count() == 2);
    CHECK(cross.branch(1).size() == 21);
    REQUIRE(cross.cross() != nullptr);
    for (double v : cross.cross()->a.values()) CHECK(v == 0.0);
    for (double v : cross.cross()->b.values()) CHECK(v == 0.0);
    CHECK(build_early(s).branch(0).front().spec().in_channels == 6);
    CHECK_THROWS_AS(build_base(6, s), SpecError);
}

TEST_CASE("output logits keep the input resolution")
{
    RngState rng(4);
    const NetworkSpec s = default_spec(2, 2);
    for (FusionMode mode : {FusionMode::single, FusionMode::early, FusionMode::late, FusionMode::cross}) {
        FusionNetwork net = build_network(mode, Modality::rgb, s, rng);
        for (auto [h, w] : {std::pair{16, 24}, std::pair{13, 30}, std::pair{8, 8}}) {
            const Tensor rgb = oracle::random_tensor(Shape{1, 3, h, w}, rng);
            const Tensor zyx = oracle::random_tensor(Shape{1, 3, h, w}, rng);
            const Tensor out = net.forward({&rgb, &zyx}, false, rng);
            CHECK(out.shape() == Shape{1, 2, h, w});
        }
    }
}

TEST_CASE("full-resolution canvas")
{
    RngState rng(5);
    FusionNetwork net = build_network(FusionMode::single, Modality::rgb, default_spec(1, 2), rng);
    const Tensor rgb = oracle::random_tensor(Shape{1, 3, 384, 1248}, rng);
    CHECK(net.forward({&rgb, nullptr}, false, rng).shape() == Shape{1, 2, 384, 1248});
}

TEST_CASE("missing modality is a contract error")
{
    RngState rng(6);
    const NetworkSpec s = default_spec(2, 2);
    const Tensor x = oracle::random_tensor(Shape{1, 3, 8, 8}, rng);
    const Tensor y = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    FusionNetwork rgb_net = build_network(FusionMode::single, Modality::rgb, s, rng);
    CHECK_THROWS_AS(rgb_net.forward({nullptr, &x}, false, rng), ContractError);
    FusionNetwork cross = build_network(FusionMode::cross, Modality::zyx, s, rng);
    CHECK_THROWS_AS(cross.forward({&x, nullptr}, false, rng), ContractError);
    CHECK_THROWS_AS(cross.forward({&x, &y}, false, rng), ContractError);
}

TEST_CASE("inference is deterministic")
{
    RngState rng(7);
    FusionNetwork net = build_network(FusionMode::cross, Modality::zyx, default_spec(2, 2), rng);
    const Tensor a = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    const Tensor b = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    RngState r1(1), r2(99);
    CHECK(net.forward({&a, &b}, false, r1).values() == net.forward({&a, &b}, false, r2).values());
}

TEST_CASE("zero cross scalars reduce to the sum of two base networks")
{
    RngState rng(8);
    const NetworkSpec s = default_spec(2, 2);
    FusionNetwork lid = build_network(FusionMode::single, Modality::zyx, s, rng);
    FusionNetwork cam = build_network(FusionMode::single, Modality::rgb, s, rng);
    FusionNetwork cross = build_cross(s);
    testing::copy_branch(lid, 0, cross, 0);
    testing::copy_branch(cam, 0, cross, 1);

    const Tensor zyx = oracle::random_tensor(Shape{1, 3, 16, 24}, rng);
    const Tensor rgb = oracle::random_tensor(Shape{1, 3, 16, 24}, rng);
    const Tensor got = cross.forward({&rgb, &zyx}, false, rng);
    const Tensor want = add(lid.forward({nullptr, &zyx}, false, rng), cam.forward({&rgb, nullptr}, false, rng));
    CHECK(max_abs_diff(got, want) == 0.0);
}

TEST_CASE("cross mode with a silent LIDAR branch equals the camera branch")
{
    RngState rng(9);
    const NetworkSpec s = default_spec(2, 2);
    FusionNetwork cross = build_network(FusionMode::cross, Modality::zyx, s, rng);
    for (Layer& l : cross.branch(0)) {
        l.params().weights.fill(0.0);
        l.params().bias.fill(0.0);
    }
    FusionNetwork cam = build_base(3, s, Modality::rgb);
    testing::copy_branch(cross, 1, cam, 0);
    const Tensor zyx(Shape{1, 3, 8, 16});
    const Tensor rgb = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    CHECK(max_abs_diff(cross.forward({&rgb, &zyx}, false, rng), cam.forward({&rgb, nullptr}, false, rng)) == 0.0);
}

TEST_CASE("early fusion with zeroed LIDAR weights equals the RGB network")
{
    RngState rng(10);
    const NetworkSpec s = default_spec(2, 2);
    FusionNetwork early = build_network(FusionMode::early, Modality::zyx, s, rng);
    FusionNetwork rgb_net = build_base(3, s, Modality::rgb);
    testing::copy_branch(early, 0, rgb_net, 0, 2);
    // First layer: take the RGB input channels 0..2 of the 6-channel kernel, zero 3..5.
    ConvParams& e1 = early.branch(0)[0].params();
    ConvParams& r1 = rgb_net.branch(0)[0].params();
    r1.bias = e1.bias;
    const Shape ws = e1.weights.shape();
    for (int o = 0; o < ws.n; ++o) {
        for (int c = 0; c < ws.c; ++c) {
            for (int y = 0; y < ws.h; ++y) {
                for (int x = 0; x < ws.w; ++x) {
                    if (c < 3) {
                        r1.weights.at(o, c, y, x) = e1.weights.at(o, c, y, x);
                    } else {
                        e1.weights.at(o, c, y, x) = 0.0;
                    }
                }
            }
        }
    }
    const Tensor rgb = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    const Tensor zyx(Shape{1, 3, 8, 16});
    CHECK(max_abs_diff(early.forward({&rgb, &zyx}, false, rng), rgb_net.forward({&rgb, nullptr}, false, rng)) == 0.0);
}

TEST_CASE("late fusion averaging identical branches equals the single network")
{
    RngState rng(11);
    const NetworkSpec s = default_spec(2, 2);
    FusionNetwork base = build_network(FusionMode::single, Modality::zyx, s, rng);
    FusionNetwork late = build_late(s);
    testing::copy_branch(base, 0, late, 0, 1, 20);
    testing::copy_branch(base, 0, late, 1, 1, 20);
    const ConvParams& out = base.branch(0)[20].params();
    ConvParams& fusion = late.late_fusion()->params();
    fusion.bias = out.bias;
    const Shape ws = out.weights.shape();
    for (int o = 0; o < ws.n; ++o) {
        for (int c = 0; c < ws.c; ++c) {
            for (int y = 0; y < ws.h; ++y) {
                for (int x = 0; x < ws.w; ++x) {
                    fusion.weights.at(o, c, y, x) = 0.5 * out.weights.at(o, c, y, x);
                    fusion.weights.at(o, c + ws.c, y, x) = 0.5 * out.weights.at(o, c, y, x);
                }
            }
        }
    }
    const Tensor x = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    CHECK(max_abs_diff(late.forward({&x, &x}, false, rng), base.forward({nullptr, &x}, false, rng)) < 1e-12);
}

TEST_CASE("cross scalar gradient is nonzero at the zero init")
{
    RngState rng(12);
    FusionNetwork net = build_network(FusionMode::cross, Modality::zyx, default_spec(2, 2), rng);
    const Tensor zyx = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    const Tensor rgb = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
    const LabelMap labels = testing::random_labels(1, 8, 16, rng);
    net.zero_grad();
    RngState drop(1);
    const Tensor logits = net.forward({&rgb, &zyx}, true, drop);
    net.backward(softmax_cross_entropy(logits, labels).grad);
    CHECK(net.cross()->a.grad()[0] != 0.0);
    CHECK(net.cross()->b.grad()[0] != 0.0);
}

TEST_CASE("gradients of every mode match finite differences")
{
    for (FusionMode mode : {FusionMode::single, FusionMode::early, FusionMode::late, FusionMode::cross}) {
        CAPTURE(to_string(mode));
        const GradCheckReport r = testing::check_network_gradients(mode, 1, 2, 8, 16, 1234, 40);
        CAPTURE(r.worst_param);
        CAPTURE(r.worst_analytic);
        CAPTURE(r.worst_numeric);
        CAPTURE(r.max_relative_error);
        CHECK(r.passed);
    }
}

TEST_CASE("every parameter array receives gradient")
{
    RngState rng(13);
    FusionNetwork net = build_network(FusionMode::cross, Modality::zyx, default_spec(2, 2), rng);
    std::vector<ParamView> views = net.parameters();
    std::vector<std::vector<bool>> touched;
    for (const ParamView& v : views) {
        touched.emplace_back(v.value.size(), false);
    }
    for (int probe = 0; probe < 10; ++probe) {
        const Tensor zyx = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
        const Tensor rgb = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
        const LabelMap labels = testing::random_labels(1, 8, 16, rng);
        net.zero_grad();
        const Tensor logits = net.forward({&rgb, &zyx}, false, rng);
        net.backward(softmax_cross_entropy(logits, labels).grad);
        for (std::size_t k = 0; k < views.size(); ++k) {
            for (std::size_t i = 0; i < views[k].grad.size(); ++i) {
                touched[k][i] = touched[k][i] || views[k].grad[i] != 0.0;
            }
        }
    }
    for (std::size_t k = 0; k < views.size(); ++k) {
        CAPTURE(views[k].name);
        // Outer taps of large dilations fall outside a small map, so only require some signal.
        CHECK(std::count(touched[k].begin(), touched[k].end(), true) > 0);
    }
}

TEST_CASE("backward without a recorded forward pass")
{
    RngState rng(14);
    FusionNetwork net = build_network(FusionMode::single, Modality::zyx, default_spec(2, 2), rng);
    CHECK_THROWS_AS(net.backward(Tensor(Shape{1, 2, 8, 8})), StaleStateError);
    const Tensor x = oracle::random_tensor(Shape{1, 3, 8, 8}, rng);
    net.forward({nullptr, &x}, false, rng, false);
    CHECK_THROWS_AS(net.backward(Tensor(Shape{1, 2, 8, 8})), StaleStateError);
    net.forward({nullptr, &x}, false, rng, true);
    CHECK_THROWS_AS(net.backward(Tensor(Shape{1, 2, 8, 16})), StaleStateError);
}

TEST_CASE("mode names round-trip")
{
    for (FusionMode m : {FusionMode::single, FusionMode::early, FusionMode::late, FusionMode::cross}) {
        CHECK(parse_fusion_mode(to_string(m)) == m);
    }
    CHECK(parse_modality(to_string(Modality::rgb)) == Modality::rgb);
    CHECK_THROWS_AS(parse_fusion_mode("mid"), ParseError);
}
