#include "crossfuse/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crossfuse/errors.hpp"

namespace crossfuse {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

// Geometry of the im2col unfolding: an image of `channels` x height x width
// read by a kernel that produces an out_h x out_w grid.
struct Unfold {
    int channels;
    int height;
    int width;
    int kh;
    int kw;
    int stride;
    int dh;
    int dw;
    int ph;
    int pw;
    int out_h;
    int out_w;

    int rows() const { return channels * kh * kw; }
    int cols() const { return out_h * out_w; }
};

void im2col(const double* img, const Unfold& g, double* cols)
{
    const std::size_t positions = static_cast<std::size_t>(g.cols());
    for (int c = 0; c < g.channels; ++c) {
        const double* src_plane = img + static_cast<std::size_t>(c) * g.height * g.width;
        for (int ki = 0; ki < g.kh; ++ki) {
            for (int kj = 0; kj < g.kw; ++kj) {
                double* row = cols + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * positions;
                for (int oy = 0; oy < g.out_h; ++oy) {
                    double* dst = row + static_cast<std::size_t>(oy) * g.out_w;
                    const int iy = oy * g.stride - g.ph + ki * g.dh;
                    if (iy < 0 || iy >= g.height) {
                        std::fill_n(dst, g.out_w, 0.0);
                        continue;
                    }
                    const double* src = src_plane + static_cast<std::size_t>(iy) * g.width;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.stride - g.pw + kj * g.dw;
                        dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const double* cols, const Unfold& g, double* img)
{
    const std::size_t positions = static_cast<std::size_t>(g.cols());
    for (int c = 0; c < g.channels; ++c) {
        double* dst_plane = img + static_cast<std::size_t>(c) * g.height * g.width;
        for (int ki = 0; ki < g.kh; ++ki) {
            for (int kj = 0; kj < g.kw; ++kj) {
                const double* row =
                    cols + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * positions;
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * g.stride - g.ph + ki * g.dh;
                    if (iy < 0 || iy >= g.height) {
                        continue;
                    }
                    const double* src = row + static_cast<std::size_t>(oy) * g.out_w;
                    double* dst = dst_plane + static_cast<std::size_t>(iy) * g.width;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.stride - g.pw + kj * g.dw;
                        if (ix >= 0 && ix < g.width) {
                            dst[ix] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

void check_params(const ConvParams& p, bool transposed, const char* op)
{
    if (p.transposed != transposed) {
        throw ShapeError(std::string(op) + ": params built for the other convolution kind");
    }
    if (p.kernel_h < 1 || p.kernel_w < 1 || p.stride < 1 || p.dilation_h < 1 || p.dilation_w < 1 ||
        p.pad_h < 0 || p.pad_w < 0 || p.in_channels < 1 || p.out_channels < 1) {
        throw GeometryError(std::string(op) + ": invalid convolution geometry");
    }
    const Shape expected = transposed ? Shape{p.in_channels, p.out_channels, p.kernel_h, p.kernel_w}
                                      : Shape{p.out_channels, p.in_channels, p.kernel_h, p.kernel_w};
    if (p.weights.shape() != expected) {
        throw ShapeError(std::string(op) + ": weights " + p.weights.shape().str() + ", expected " +
                         expected.str());
    }
    if (p.bias.shape() != Shape{1, p.out_channels, 1, 1}) {
        throw ShapeError(std::string(op) + ": bias " + p.bias.shape().str());
    }
}

bool same_geometry(const ConvParams& a, const ConvParams& b)
{
    return a.kernel_h == b.kernel_h && a.kernel_w == b.kernel_w && a.stride == b.stride &&
           a.dilation_h == b.dilation_h && a.dilation_w == b.dilation_w && a.pad_h == b.pad_h &&
           a.pad_w == b.pad_w && a.in_channels == b.in_channels &&
           a.out_channels == b.out_channels && a.transposed == b.transposed;
}

ConvParams geometry_only(const ConvParams& p)
{
    ConvParams g;
    g.kernel_h = p.kernel_h;
    g.kernel_w = p.kernel_w;
    g.stride = p.stride;
    g.dilation_h = p.dilation_h;
    g.dilation_w = p.dilation_w;
    g.pad_h = p.pad_h;
    g.pad_w = p.pad_w;
    g.in_channels = p.in_channels;
    g.out_channels = p.out_channels;
    g.transposed = p.transposed;
    return g;
}

void check_cache(const Tensor& grad_out, const ConvCache& cache, const ConvParams& params,
                 const char* op)
{
    if (!cache.valid) {
        throw StaleStateError(std::string(op) + ": no forward state recorded");
    }
    if (!same_geometry(cache.geometry, params)) {
        throw StaleStateError(std::string(op) + ": saved state belongs to different parameters");
    }
    if (grad_out.shape() != cache.output_shape) {
        throw StaleStateError(std::string(op) + ": grad_out " + grad_out.shape().str() +
                              " does not match forward output " + cache.output_shape.str());
    }
}

}  // namespace

ConvParams make_conv_params(int in_channels, int out_channels, int kernel_h, int kernel_w,
                            int stride, int dilation_h, int dilation_w, int pad_h, int pad_w,
                            bool transposed)
{
    ConvParams p;
    p.kernel_h = kernel_h;
    p.kernel_w = kernel_w;
    p.stride = stride;
    p.dilation_h = dilation_h;
    p.dilation_w = dilation_w;
    p.pad_h = pad_h;
    p.pad_w = pad_w;
    p.in_channels = in_channels;
    p.out_channels = out_channels;
    p.transposed = transposed;
    if (in_channels < 1 || out_channels < 1 || kernel_h < 1 || kernel_w < 1 || stride < 1 ||
        dilation_h < 1 || dilation_w < 1 || pad_h < 0 || pad_w < 0) {
        throw GeometryError("make_conv_params: invalid geometry");
    }
    p.weights = transposed ? Tensor({in_channels, out_channels, kernel_h, kernel_w})
                           : Tensor({out_channels, in_channels, kernel_h, kernel_w});
    p.bias = Tensor({1, out_channels, 1, 1});
    return p;
}

void he_uniform_init(ConvParams& params, RngState& rng)
{
    double fan_in = static_cast<double>(params.in_channels) * params.kernel_h * params.kernel_w;
    if (params.transposed) {
        // each output position only sees every stride-th tap per axis
        fan_in /= static_cast<double>(params.stride) * params.stride;
    }
    const double bound = std::sqrt(6.0 / std::max(fan_in, 1.0));
    for (double& w : params.weights.data()) {
        w = rng.uniform(-bound, bound);
    }
    params.bias.fill(0.0);
}

int conv_output_size(int input, int kernel, int stride, int dilation, int pad)
{
    const int span = input + 2 * pad - dilation * (kernel - 1) - 1;
    if (span < 0) {
        throw GeometryError("convolution output is empty for input extent " + std::to_string(input));
    }
    if (span % stride != 0) {
        throw GeometryError("convolution output extent is fractional for input " +
                            std::to_string(input) + " and stride " + std::to_string(stride));
    }
    return span / stride + 1;
}

int transposed_output_size(int input, int kernel, int stride, int dilation, int pad)
{
    const int out = (input - 1) * stride - 2 * pad + dilation * (kernel - 1) + 1;
    if (input < 1 || out < 1) {
        throw GeometryError("transposed convolution output is empty for input extent " +
                            std::to_string(input));
    }
    return out;
}

Tensor conv2d(const Tensor& input, const ConvParams& params, ConvCache* cache)
{
    check_params(params, false, "conv2d");
    const Shape in = input.shape();
    if (in.c != params.in_channels) {
        throw ShapeError("conv2d: input " + in.str() + " has " + std::to_string(in.c) +
                         " channels, params expect " + std::to_string(params.in_channels));
    }
    const int out_h = conv_output_size(in.h, params.kernel_h, params.stride, params.dilation_h, params.pad_h);
    const int out_w = conv_output_size(in.w, params.kernel_w, params.stride, params.dilation_w, params.pad_w);
    const Unfold g{in.c, in.h, in.w, params.kernel_h, params.kernel_w, params.stride,
                   params.dilation_h, params.dilation_w, params.pad_h, params.pad_w, out_h, out_w};

    Tensor out({in.n, params.out_channels, out_h, out_w});
    std::vector<double> cols(static_cast<std::size_t>(g.rows()) * g.cols());
    const ConstMap weights(params.weights.data().data(), params.out_channels, g.rows());
    for (int n = 0; n < in.n; ++n) {
        im2col(input.plane(n, 0), g, cols.data());
        MutMap y(out.plane(n, 0), params.out_channels, g.cols());
        y.noalias() = weights * ConstMap(cols.data(), g.rows(), g.cols());
        for (int o = 0; o < params.out_channels; ++o) {
            y.row(o).array() += params.bias[static_cast<std::size_t>(o)];
        }
    }
    if (cache != nullptr) {
        cache->input = input;
        cache->input.drop_grad();
        cache->output_shape = out.shape();
        cache->geometry = geometry_only(params);
        cache->valid = true;
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const ConvCache& cache, const ConvParams& params)
{
    check_params(params, false, "conv2d_backward");
    check_cache(grad_out, cache, params, "conv2d_backward");
    const Shape in = cache.input.shape();
    const Shape os = cache.output_shape;
    const Unfold g{in.c, in.h, in.w, params.kernel_h, params.kernel_w, params.stride,
                   params.dilation_h, params.dilation_w, params.pad_h, params.pad_w, os.h, os.w};

    ConvGrads grads{Tensor(in), Tensor(params.weights.shape()), Tensor(params.bias.shape())};
    std::vector<double> cols(static_cast<std::size_t>(g.rows()) * g.cols());
    std::vector<double> grad_cols(cols.size());
    const ConstMap weights(params.weights.data().data(), params.out_channels, g.rows());
    MutMap grad_w(grads.grad_weights.data().data(), params.out_channels, g.rows());
    for (int n = 0; n < in.n; ++n) {
        const ConstMap gy(grad_out.plane(n, 0), params.out_channels, g.cols());
        im2col(cache.input.plane(n, 0), g, cols.data());
        grad_w.noalias() += gy * ConstMap(cols.data(), g.rows(), g.cols()).transpose();
        for (int o = 0; o < params.out_channels; ++o) {
            grads.grad_bias[static_cast<std::size_t>(o)] += gy.row(o).sum();
        }
        MutMap gc(grad_cols.data(), g.rows(), g.cols());
        gc.noalias() = weights.transpose() * gy;
        col2im_add(grad_cols.data(), g, grads.grad_input.plane(n, 0));
    }
    return grads;
}

Tensor transposed_conv2d(const Tensor& input, const ConvParams& params, ConvCache* cache)
{
    check_params(params, true, "transposed_conv2d");
    const Shape in = input.shape();
    if (in.c != params.in_channels) {
        throw ShapeError("transposed_conv2d: input " + in.str() + " has " + std::to_string(in.c) +
                         " channels, params expect " + std::to_string(params.in_channels));
    }
    const int out_h = transposed_output_size(in.h, params.kernel_h, params.stride, params.dilation_h, params.pad_h);
    const int out_w = transposed_output_size(in.w, params.kernel_w, params.stride, params.dilation_w, params.pad_w);
    // Unfolding of the output image as seen by the adjoint convolution.
    const Unfold g{params.out_channels, out_h, out_w, params.kernel_h, params.kernel_w,
                   params.stride, params.dilation_h, params.dilation_w, params.pad_h,
                   params.pad_w, in.h, in.w};

    Tensor out({in.n, params.out_channels, out_h, out_w});
    std::vector<double> cols(static_cast<std::size_t>(g.rows()) * g.cols());
    const ConstMap weights(params.weights.data().data(), params.in_channels, g.rows());
    for (int n = 0; n < in.n; ++n) {
        const ConstMap x(input.plane(n, 0), params.in_channels, g.cols());
        MutMap c(cols.data(), g.rows(), g.cols());
        c.noalias() = weights.transpose() * x;
        col2im_add(cols.data(), g, out.plane(n, 0));
        for (int o = 0; o < params.out_channels; ++o) {
            double* plane = out.plane(n, o);
            const double b = params.bias[static_cast<std::size_t>(o)];
            for (std::size_t i = 0; i < static_cast<std::size_t>(out_h) * out_w; ++i) {
                plane[i] += b;
            }
        }
    }
    if (cache != nullptr) {
        cache->input = input;
        cache->input.drop_grad();
        cache->output_shape = out.shape();
        cache->geometry = geometry_only(params);
        cache->valid = true;
    }
    return out;
}

ConvGrads transposed_conv2d_backward(const Tensor& grad_out, const ConvCache& cache,
                                     const ConvParams& params)
{
    check_params(params, true, "transposed_conv2d_backward");
    check_cache(grad_out, cache, params, "transposed_conv2d_backward");
    const Shape in = cache.input.shape();
    const Shape os = cache.output_shape;
    const Unfold g{params.out_channels, os.h, os.w, params.kernel_h, params.kernel_w,
                   params.stride, params.dilation_h, params.dilation_w, params.pad_h,
                   params.pad_w, in.h, in.w};

    ConvGrads grads{Tensor(in), Tensor(params.weights.shape()), Tensor(params.bias.shape())};
    std::vector<double> cols(static_cast<std::size_t>(g.rows()) * g.cols());
    const ConstMap weights(params.weights.data().data(), params.in_channels, g.rows());
    MutMap grad_w(grads.grad_weights.data().data(), params.in_channels, g.rows());
    for (int n = 0; n < in.n; ++n) {
        im2col(grad_out.plane(n, 0), g, cols.data());
        const ConstMap gc(cols.data(), g.rows(), g.cols());
        const ConstMap x(cache.input.plane(n, 0), params.in_channels, g.cols());
        MutMap gx(grads.grad_input.plane(n, 0), params.in_channels, g.cols());
        gx.noalias() = weights * gc;
        grad_w.noalias() += x * gc.transpose();
        for (int o = 0; o < params.out_channels; ++o) {
            const double* plane = grad_out.plane(n, o);
            double s = 0.0;
            for (std::size_t i = 0; i < os.plane(); ++i) {
                s += plane[i];
            }
            grads.grad_bias[static_cast<std::size_t>(o)] += s;
        }
    }
    return grads;
}

Tensor elu(const Tensor& input)
{
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double x = input[i];
        out[i] = x >= 0.0 ? x : std::expm1(x);
    }
    return out;
}

Tensor elu_backward(const Tensor& grad_out, const Tensor& output)
{
    if (grad_out.shape() != output.shape()) {
        throw StaleStateError("elu_backward: grad_out " + grad_out.shape().str() +
                              " vs saved output " + output.shape().str());
    }
    Tensor g(output.shape());
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double y = output[i];
        g[i] = grad_out[i] * (y >= 0.0 ? 1.0 : y + 1.0);
    }
    return g;
}

DropoutResult spatial_dropout(const Tensor& input, double p, RngState& rng, bool training)
{
    if (!(p >= 0.0 && p < 1.0)) {
        throw DomainError("spatial_dropout: probability " + std::to_string(p) + " outside [0, 1)");
    }
    const Shape s = input.shape();
    DropoutResult r{input, std::vector<double>(static_cast<std::size_t>(s.n) * s.c, 1.0)};
    r.output.drop_grad();
    if (!training || p == 0.0) {
        return r;
    }
    const double keep_scale = 1.0 / (1.0 - p);
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const double scale = rng.uniform() < p ? 0.0 : keep_scale;
            r.channel_scale[static_cast<std::size_t>(n) * s.c + c] = scale;
            double* plane = r.output.plane(n, c);
            for (std::size_t i = 0; i < s.plane(); ++i) {
                plane[i] *= scale;
            }
        }
    }
    return r;
}

Tensor spatial_dropout_backward(const Tensor& grad_out, std::span<const double> channel_scale)
{
    const Shape s = grad_out.shape();
    if (channel_scale.size() != static_cast<std::size_t>(s.n) * s.c) {
        throw StaleStateError("spatial_dropout_backward: mask has " +
                              std::to_string(channel_scale.size()) + " entries for " + s.str());
    }
    Tensor g = grad_out;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const double scale = channel_scale[static_cast<std::size_t>(n) * s.c + c];
            if (scale == 1.0) {
                continue;
            }
            double* plane = g.plane(n, c);
            for (std::size_t i = 0; i < s.plane(); ++i) {
                plane[i] *= scale;
            }
        }
    }
    return g;
}

LossResult softmax_cross_entropy(const Tensor& logits, const LabelMap& labels)
{
    const Shape s = logits.shape();
    if (labels.batch != s.n || labels.height != s.h || labels.width != s.w ||
        labels.data.size() != static_cast<std::size_t>(s.n) * s.plane()) {
        throw ShapeError("softmax_cross_entropy: labels " + std::to_string(labels.batch) + "x" +
                         std::to_string(labels.height) + "x" + std::to_string(labels.width) +
                         " vs logits " + s.str());
    }
    LossResult r{0.0, Tensor(s), 0};
    std::vector<double> prob(static_cast<std::size_t>(s.c));
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n) {
        for (std::size_t i = 0; i < plane; ++i) {
            const std::uint8_t label = labels.data[static_cast<std::size_t>(n) * plane + i];
            if (label == kIgnoreLabel) {
                continue;
            }
            if (label >= s.c) {
                throw DomainError("softmax_cross_entropy: label " + std::to_string(label) +
                                  " outside 0.." + std::to_string(s.c - 1));
            }
            double m = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < s.c; ++c) {
                m = std::max(m, logits.plane(n, c)[i]);
            }
            double z = 0.0;
            for (int c = 0; c < s.c; ++c) {
                prob[c] = std::exp(logits.plane(n, c)[i] - m);
                z += prob[c];
            }
            r.loss += std::log(z) + m - logits.plane(n, label)[i];
            for (int c = 0; c < s.c; ++c) {
                r.grad.plane(n, c)[i] = prob[c] / z - (c == label ? 1.0 : 0.0);
            }
            ++r.counted_pixels;
        }
    }
    if (r.counted_pixels == 0) {
        throw DomainError("softmax_cross_entropy: every pixel is ignored, loss undefined");
    }
    const double inv = 1.0 / static_cast<double>(r.counted_pixels);
    r.loss *= inv;
    for (double& g : r.grad.data()) {
        g *= inv;
    }
    return r;
}

std::vector<double> class_probability(const Tensor& logits, int cls)
{
    const Shape s = logits.shape();
    if (cls < 0 || cls >= s.c) {
        throw ShapeError("class_probability: class " + std::to_string(cls) + " of " + s.str());
    }
    std::vector<double> out(static_cast<std::size_t>(s.n) * s.plane());
    for (int n = 0; n < s.n; ++n) {
        for (std::size_t i = 0; i < s.plane(); ++i) {
            double m = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < s.c; ++c) {
                m = std::max(m, logits.plane(n, c)[i]);
            }
            double z = 0.0;
            for (int c = 0; c < s.c; ++c) {
                z += std::exp(logits.plane(n, c)[i] - m);
            }
            out[static_cast<std::size_t>(n) * s.plane() + i] = std::exp(logits.plane(n, cls)[i] - m) / z;
        }
    }
    return out;
}

}  // namespace crossfuse
