#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "crossfuse/tensor.hpp"

namespace crossfuse {

/// Label value excluded from loss and metrics.
inline constexpr std::uint8_t kIgnoreLabel = 255;

/// Per-pixel class indices for a batch, laid out N x H x W.
struct LabelMap {
    int batch = 1;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    LabelMap() = default;
    LabelMap(int batch, int height, int width, std::uint8_t fill = kIgnoreLabel)
        : batch(batch), height(height), width(width),
          data(static_cast<std::size_t>(batch) * height * width, fill)
    {
    }
    std::uint8_t& at(int n, int y, int x)
    {
        return data[(static_cast<std::size_t>(n) * height + y) * width + x];
    }
    std::uint8_t at(int n, int y, int x) const
    {
        return data[(static_cast<std::size_t>(n) * height + y) * width + x];
    }
    bool operator==(const LabelMap&) const = default;
};

/// Convolution geometry plus trainable weights.
///
/// Plain convolutions store weights as out x in x kh x kw. Transposed
/// convolutions store them as in x out x kh x kw, which is the same buffer a
/// plain convolution mapping out -> in would use; the two are adjoint.
struct ConvParams {
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int dilation_h = 1;
    int dilation_w = 1;
    int pad_h = 0;
    int pad_w = 0;
    int in_channels = 1;
    int out_channels = 1;
    bool transposed = false;
    Tensor weights;
    Tensor bias;  // 1 x out x 1 x 1

    std::size_t parameter_count() const
    {
        return static_cast<std::size_t>(kernel_h) * kernel_w * in_channels * out_channels +
               static_cast<std::size_t>(out_channels);
    }
};

ConvParams make_conv_params(int in_channels, int out_channels, int kernel_h, int kernel_w,
                            int stride = 1, int dilation_h = 1, int dilation_w = 1,
                            int pad_h = 0, int pad_w = 0, bool transposed = false);

/// He-style uniform init: U(-b, b) with b = sqrt(6 / fan_in), zero bias.
void he_uniform_init(ConvParams& params, RngState& rng);

/// Output spatial extent of a convolution; throws GeometryError when empty or fractional.
int conv_output_size(int input, int kernel, int stride, int dilation, int pad);
int transposed_output_size(int input, int kernel, int stride, int dilation, int pad);

/// State saved by a forward convolution for its backward pass.
struct ConvCache {
    Tensor input;
    Shape output_shape;
    ConvParams geometry;  // weights left empty
    bool valid = false;
};

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_bias;
};

/// Cross-correlation with stride, dilation and zero padding.
Tensor conv2d(const Tensor& input, const ConvParams& params, ConvCache* cache = nullptr);
ConvGrads conv2d_backward(const Tensor& grad_out, const ConvCache& cache, const ConvParams& params);

/// Adjoint of conv2d under shared weights, plus bias.
Tensor transposed_conv2d(const Tensor& input, const ConvParams& params, ConvCache* cache = nullptr);
ConvGrads transposed_conv2d_backward(const Tensor& grad_out, const ConvCache& cache,
                                     const ConvParams& params);

Tensor elu(const Tensor& input);
/// Uses the forward output: f'(x) = 1 for x >= 0, f(x) + 1 otherwise.
Tensor elu_backward(const Tensor& grad_out, const Tensor& output);

struct DropoutResult {
    Tensor output;
    /// One factor per (n, c): 0 or 1/(1-p).
    std::vector<double> channel_scale;
};

/// Zeroes whole feature maps with probability p in training mode.
DropoutResult spatial_dropout(const Tensor& input, double p, RngState& rng, bool training);
Tensor spatial_dropout_backward(const Tensor& grad_out, std::span<const double> channel_scale);

struct LossResult {
    double loss = 0.0;
    Tensor grad;
    std::size_t counted_pixels = 0;
};

/// Mean softmax cross-entropy over non-ignored pixels.
LossResult softmax_cross_entropy(const Tensor& logits, const LabelMap& labels);

/// Softmax probability of one class per pixel (N x H x W, row-major).
std::vector<double> class_probability(const Tensor& logits, int cls);

}  // namespace crossfuse
