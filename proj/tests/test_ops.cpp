#include "doctest.h"

#include <cmath>

#include "crossfuse/errors.hpp"
#include "crossfuse/gradcheck.hpp"
#include "crossfuse/ops.hpp"
#include "oracles.hpp"

using namespace crossfuse;

namespace {

ConvParams random_conv(int in, int out, int k, int stride, int dil, int pad, bool transposed, RngState& rng)
{
    ConvParams p = make_conv_params(in, out, k, k, stride, dil, dil, pad, pad, transposed);
    p.weights = oracle::random_tensor(p.weights.shape(), rng);
    p.bias = oracle::random_tensor(p.bias.shape(), rng);
    return p;
}

// Loss = <probe, f(x)> so that every output position contributes.
GradCheckTarget conv_target(ConvParams& p, Tensor& x, const Tensor& probe, bool transposed)
{
    GradCheckTarget t;
    x.ensure_grad();
    p.weights.ensure_grad();
    p.bias.ensure_grad();
    t.loss = [&p, &x, &probe, transposed] {
        return dot(transposed ? transposed_conv2d(x, p) : conv2d(x, p), probe);
    };
    t.backward = [&p, &x, &probe, transposed] {
        ConvCache cache;
        if (transposed) {
            transposed_conv2d(x, p, &cache);
        } else {
            conv2d(x, p, &cache);
        }
        const ConvGrads g = transposed ? transposed_conv2d_backward(probe, cache, p) : conv2d_backward(probe, cache, p);
        std::copy(g.grad_input.values().begin(), g.grad_input.values().end(), x.grad().begin());
        std::copy(g.grad_weights.values().begin(), g.grad_weights.values().end(), p.weights.grad().begin());
        std::copy(g.grad_bias.values().begin(), g.grad_bias.values().end(), p.bias.grad().begin());
    };
    t.params = {{"input", x.data(), x.grad()},
                {"weights", p.weights.data(), p.weights.grad()},
                {"bias", p.bias.data(), p.bias.grad()}};
    return t;
}

}  // namespace

TEST_CASE("conv2d box sum on ones")
{
    ConvParams p = make_conv_params(1, 1, 3, 3, 1, 1, 1, 1, 1);
    p.weights.fill(1.0);
    const Tensor out = conv2d(Tensor(Shape{1, 1, 3, 3}, 1.0), p);
    CHECK(out.shape() == Shape{1, 1, 3, 3});
    CHECK(out.at(0, 0, 1, 1) == 9.0);
    CHECK(out.at(0, 0, 0, 0) == 4.0);
    CHECK(out.at(0, 0, 0, 1) == 6.0);
}

TEST_CASE("conv2d impulse response is the flipped kernel")
{
    RngState rng(5);
    for (int k = 1; k <= 5; ++k) {
        const int pad = k / 2;
        const int size = 2 * k + 1;
        ConvParams p = make_conv_params(1, 1, k, k, 1, 1, 1, pad, pad);
        p.weights = oracle::random_tensor(p.weights.shape(), rng);
        Tensor x(Shape{1, 1, size, size});
        const int c = size / 2;
        x.at(0, 0, c, c) = 1.0;
        const Tensor out = conv2d(x, p);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                // Output at (c + pad - ky, c + pad - kx) reads the impulse through tap (ky, kx).
                CHECK(out.at(0, 0, c + pad - ky, c + pad - kx) == p.weights.at(0, 0, ky, kx));
            }
        }
    }
}

TEST_CASE("conv2d matches the nested-loop reference")
{
    RngState rng(11);
    struct Case {
        int in, out, k, stride, dil, pad, h, w;
    };
    const Case cases[] = {{2, 3, 3, 1, 2, 2, 8, 8}, {3, 2, 4, 2, 1, 1, 8, 12}, {1, 4, 3, 1, 1, 0, 7, 5},
                          {2, 2, 1, 1, 1, 0, 4, 6}, {2, 1, 3, 1, 3, 3, 9, 9}};
    for (const Case& c : cases) {
        const ConvParams p = random_conv(c.in, c.out, c.k, c.stride, c.dil, c.pad, false, rng);
        const Tensor x = oracle::random_tensor(Shape{2, c.in, c.h, c.w}, rng);
        const Tensor got = conv2d(x, p);
        const Tensor want = oracle::conv2d(x, p.weights, p.bias, c.stride, c.dil, c.dil, c.pad, c.pad);
        REQUIRE(got.shape() == want.shape());
        CHECK(max_abs_diff(got, want) < 1e-12);
    }
}

TEST_CASE("anisotropic dilation matches the reference")
{
    RngState rng(12);
    ConvParams p = make_conv_params(2, 2, 3, 3, 1, 2, 4, 2, 4);
    p.weights = oracle::random_tensor(p.weights.shape(), rng);
    const Tensor x = oracle::random_tensor(Shape{1, 2, 6, 10}, rng);
    const Tensor got = conv2d(x, p);
    CHECK(got.shape() == Shape{1, 2, 6, 10});
    CHECK(max_abs_diff(got, oracle::conv2d(x, p.weights, p.bias, 1, 2, 4, 2, 4)) < 1e-12);
}

TEST_CASE("conv2d geometry and shape errors")
{
    ConvParams p = make_conv_params(2, 1, 3, 3, 1, 1, 1, 0, 0);
    CHECK_THROWS_AS(conv2d(Tensor(Shape{1, 3, 5, 5}), p), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor(Shape{1, 2, 2, 2}), p), GeometryError);
    CHECK_THROWS_AS(conv_output_size(7, 4, 2, 1, 1), GeometryError);
    CHECK(conv_output_size(8, 4, 2, 1, 1) == 4);
}

TEST_CASE("conv2d backward basics")
{
    RngState rng(3);
    ConvParams p = random_conv(2, 3, 3, 1, 1, 1, false, rng);
    const Tensor x(Shape{1, 2, 5, 4}, 1.0);
    ConvCache cache;
    const Tensor out = conv2d(x, p, &cache);

    const ConvGrads zero = conv2d_backward(Tensor(out.shape()), cache, p);
    for (const Tensor* g : {&zero.grad_input, &zero.grad_weights, &zero.grad_bias}) {
        for (double v : g->values()) {
            CHECK(v == 0.0);
        }
    }
    const ConvGrads ones = conv2d_backward(Tensor(out.shape(), 1.0), cache, p);
    for (double v : ones.grad_bias.values()) {
        CHECK(v == 20.0);
    }

    CHECK_THROWS_AS(conv2d_backward(Tensor(Shape{1, 3, 4, 4}), cache, p), StaleStateError);
    CHECK_THROWS_AS(conv2d_backward(Tensor(out.shape()), ConvCache{}, p), StaleStateError);
    ConvParams other = random_conv(2, 3, 1, 1, 1, 0, false, rng);
    CHECK_THROWS_AS(conv2d_backward(Tensor(out.shape()), cache, other), StaleStateError);
}

TEST_CASE("conv2d gradients match finite differences")
{
    RngState rng(21);
    struct Case {
        int in, out, k, stride, dil, pad, h, w;
    };
    const Case cases[] = {{2, 3, 3, 1, 1, 1, 6, 6}, {2, 2, 4, 2, 1, 1, 8, 8}, {1, 2, 3, 1, 2, 2, 8, 8}};
    for (const Case& c : cases) {
        ConvParams p = random_conv(c.in, c.out, c.k, c.stride, c.dil, c.pad, false, rng);
        Tensor x = oracle::random_tensor(Shape{1, c.in, c.h, c.w}, rng);
        const Tensor probe = oracle::random_tensor(conv2d(x, p).shape(), rng);
        const GradCheckReport r = gradient_check(conv_target(p, x, probe, false), 1e-6);
        CAPTURE(r.worst_param);
        CAPTURE(r.max_relative_error);
        CHECK(r.passed);
    }
}

TEST_CASE("transposed convolution doubles the size and matches the scatter reference")
{
    RngState rng(31);
    ConvParams p = random_conv(1, 1, 4, 2, 1, 1, true, rng);
    CHECK(transposed_conv2d(Tensor(Shape{1, 1, 2, 2}, 1.0), p).shape() == Shape{1, 1, 4, 4});

    ConvParams q = random_conv(3, 2, 4, 2, 1, 1, true, rng);
    const Tensor x = oracle::random_tensor(Shape{2, 3, 3, 5}, rng);
    const Tensor got = transposed_conv2d(x, q);
    CHECK(got.shape() == Shape{2, 2, 6, 10});
    CHECK(max_abs_diff(got, oracle::transposed_conv2d(x, q.weights, q.bias, 2, 1, 1, 1, 1)) < 1e-12);
}

TEST_CASE("transposed convolution is the adjoint of conv2d")
{
    RngState rng(41);
    struct Case {
        int k, stride, dil, pad, size;
    };
    const Case cases[] = {{3, 1, 1, 1, 8}, {4, 2, 1, 1, 8}, {3, 1, 2, 2, 8}, {3, 2, 1, 1, 9}, {5, 1, 3, 0, 14}};
    for (const auto& [k, stride, dil, pad, size] : cases) {
        ConvParams fwd = make_conv_params(3, 2, k, k, stride, dil, dil, pad, pad, false);
        fwd.weights = oracle::random_tensor(fwd.weights.shape(), rng);
        ConvParams adj = make_conv_params(2, 3, k, k, stride, dil, dil, pad, pad, true);
        adj.weights = fwd.weights;  // in x out of the adjoint == out x in of the forward

        const Tensor x = oracle::random_tensor(Shape{1, 3, size, size}, rng);
        const Tensor cx = conv2d(x, fwd);
        const Tensor y = oracle::random_tensor(cx.shape(), rng);
        const Tensor ty = transposed_conv2d(y, adj);
        REQUIRE(ty.shape() == x.shape());
        const double lhs = dot(cx, y);
        const double rhs = dot(x, ty);
        CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("transposed convolution gradients match finite differences")
{
    RngState rng(51);
    ConvParams p = random_conv(2, 3, 4, 2, 1, 1, true, rng);
    Tensor x = oracle::random_tensor(Shape{1, 2, 3, 4}, rng);
    const Tensor probe = oracle::random_tensor(transposed_conv2d(x, p).shape(), rng);
    const GradCheckReport r = gradient_check(conv_target(p, x, probe, true), 1e-6);
    CAPTURE(r.worst_param);
    CAPTURE(r.max_relative_error);
    CHECK(r.passed);
}

TEST_CASE("elu values and derivative")
{
    const Tensor x(Shape{1, 1, 1, 3}, {0.0, 1.0, -1.0});
    const Tensor y = elu(x);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 1.0);
    CHECK(y[2] == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-15));
    CHECK(y[2] == doctest::Approx(-0.6321).epsilon(1e-4));

    RngState rng(61);
    Tensor in = oracle::random_tensor(Shape{1, 2, 4, 4}, rng, -3.0, 3.0);
    const Tensor probe = oracle::random_tensor(in.shape(), rng);
    in.ensure_grad();
    GradCheckTarget t;
    t.loss = [&] { return dot(elu(in), probe); };
    t.backward = [&] {
        const Tensor g = elu_backward(probe, elu(in));
        std::copy(g.values().begin(), g.values().end(), in.grad().begin());
    };
    t.params = {{"x", in.data(), in.grad()}};
    const GradCheckReport r = gradient_check(t, 1e-7);
    CAPTURE(r.max_relative_error);
    CHECK(r.passed);

    const Tensor neg(Shape{1, 1, 1, 1}, {-0.7});
    CHECK(elu_backward(Tensor(Shape{1, 1, 1, 1}, 1.0), elu(neg))[0] == doctest::Approx(elu(neg)[0] + 1.0));
}

TEST_CASE("spatial dropout zeroes whole channels")
{
    RngState rng(71);
    const Tensor x = oracle::random_tensor(Shape{1, 6, 3, 3}, rng, 0.5, 1.0);
    CHECK(spatial_dropout(x, 0.25, rng, false).output.values() == x.values());
    CHECK(spatial_dropout(x, 0.0, rng, true).output.values() == x.values());
    CHECK_THROWS_AS(spatial_dropout(x, 1.0, rng, true), DomainError);
    CHECK_THROWS_AS(spatial_dropout(x, -0.1, rng, true), DomainError);

    const Tensor big(Shape{1, 10000, 1, 2}, 1.0);
    RngState seeded(2024);
    const DropoutResult d = spatial_dropout(big, 0.25, seeded, true);
    int zeroed = 0;
    for (int c = 0; c < 10000; ++c) {
        const double a = d.output.at(0, c, 0, 0);
        const double b = d.output.at(0, c, 0, 1);
        REQUIRE(a == b);
        REQUIRE((a == 0.0 || std::abs(a - 1.0 / 0.75) < 1e-15));
        zeroed += a == 0.0;
    }
    CHECK(std::abs(zeroed / 10000.0 - 0.25) < 0.02);

    const Tensor g = spatial_dropout_backward(Tensor(big.shape(), 1.0), d.channel_scale);
    CHECK(g.values() == d.output.values());
}

TEST_CASE("softmax cross-entropy")
{
    LabelMap labels(1, 2, 2, 0);
    labels.at(0, 0, 1) = 1;
    const LossResult uniform = softmax_cross_entropy(Tensor(Shape{1, 2, 2, 2}, 0.3), labels);
    CHECK(uniform.loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(uniform.counted_pixels == 4);

    Tensor sure(Shape{1, 2, 2, 2});
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            sure.at(0, labels.at(0, y, x), y, x) = 50.0;
        }
    }
    CHECK(softmax_cross_entropy(sure, labels).loss < 1e-20);

    labels.at(0, 1, 1) = kIgnoreLabel;
    RngState rng(81);
    const Tensor logits = oracle::random_tensor(Shape{1, 2, 2, 2}, rng);
    const LossResult r = softmax_cross_entropy(logits, labels);
    CHECK(r.counted_pixels == 3);
    CHECK(r.grad.at(0, 0, 1, 1) == 0.0);
    CHECK(r.grad.at(0, 1, 1, 1) == 0.0);

    CHECK_THROWS_AS(softmax_cross_entropy(logits, LabelMap(1, 2, 2, kIgnoreLabel)), DomainError);
    LabelMap bad(1, 2, 2, 0);
    bad.at(0, 0, 0) = 7;
    CHECK_THROWS_AS(softmax_cross_entropy(logits, bad), DomainError);
}

TEST_CASE("softmax cross-entropy gradient matches finite differences")
{
    RngState rng(91);
    Tensor logits = oracle::random_tensor(Shape{1, 2, 4, 4}, rng, -2.0, 2.0);
    LabelMap labels(1, 4, 4, 0);
    for (auto& l : labels.data) {
        const auto u = rng.below(3);
        l = u == 2 ? kIgnoreLabel : static_cast<std::uint8_t>(u);
    }
    logits.ensure_grad();
    GradCheckTarget t;
    t.loss = [&] { return softmax_cross_entropy(logits, labels).loss; };
    t.backward = [&] {
        const LossResult r = softmax_cross_entropy(logits, labels);
        std::copy(r.grad.values().begin(), r.grad.values().end(), logits.grad().begin());
    };
    t.params = {{"logits", logits.data(), logits.grad()}};
    const GradCheckReport r = gradient_check(t, 1e-6);
    CAPTURE(r.max_relative_error);
    CHECK(r.passed);
}

TEST_CASE("class probabilities sum to one")
{
    RngState rng(92);
    const Tensor logits = oracle::random_tensor(Shape{1, 2, 3, 3}, rng, -4.0, 4.0);
    const auto p0 = class_probability(logits, 0);
    const auto p1 = class_probability(logits, 1);
    for (std::size_t i = 0; i < p0.size(); ++i) {
        CHECK(p0[i] + p1[i] == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(class_probability(logits, 2), ShapeError);
}

TEST_CASE("parameter count formula")
{
    const ConvParams p = make_conv_params(3, 5, 4, 2, 2, 1, 1, 1, 0);
    CHECK(p.parameter_count() == 4 * 2 * 3 * 5 + 5);
    CHECK(p.weights.size() + p.bias.size() == p.parameter_count());
}

TEST_CASE("he init bounds and zero bias")
{
    RngState rng(93);
    ConvParams p = make_conv_params(4, 8, 3, 3);
    he_uniform_init(p, rng);
    const double bound = std::sqrt(6.0 / (4 * 9));
    for (double w : p.weights.values()) {
        CHECK(std::abs(w) <= bound);
    }
    for (double b : p.bias.values()) {
        CHECK(b == 0.0);
    }
}

TEST_CASE("gradient check catches a wrong gradient")
{
    Tensor w(Shape{1, 1, 1, 2}, {0.3, -0.8});
    w.ensure_grad();
    GradCheckTarget t;
    t.loss = [&] { return w[0] * w[0] + 3.0 * w[1]; };
    t.backward = [&] {
        w.grad()[0] = 2.0 * w[0];
        w.grad()[1] = 2.9;  // wrong on purpose
    };
    t.params = {{"w", w.data(), w.grad()}};
    const GradCheckReport r = gradient_check(t, 1e-6);
    CHECK_FALSE(r.passed);
    CHECK(r.worst_index == 1);
}
