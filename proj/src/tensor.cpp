#include "crossfuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "crossfuse/errors.hpp"

namespace crossfuse {

std::string Shape::str() const
{
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(shape)
{
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
        throw ShapeError("negative tensor extent " + shape.str());
    }
    data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values))
{
    if (data_.size() != shape.numel()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape.str());
    }
}

void Tensor::ensure_grad()
{
    if (grad_.size() != data_.size()) {
        grad_.assign(data_.size(), 0.0);
    }
}

void Tensor::zero_grad()
{
    std::fill(grad_.begin(), grad_.end(), 0.0);
}

void Tensor::fill(double v)
{
    std::fill(data_.begin(), data_.end(), v);
}

std::uint64_t RngState::next_u64()
{
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double RngState::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngState::below(std::uint64_t n)
{
    if (n == 0) {
        throw DomainError("RngState::below requires n > 0");
    }
    return next_u64() % n;
}

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape " + a.shape().str() + " vs " + b.shape().str());
    }
}

}  // namespace

double dot(const Tensor& a, const Tensor& b)
{
    require_same(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void add_inplace(Tensor& dst, const Tensor& src, double scale)
{
    require_same(dst, src, "add");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += scale * src[i];
    }
}

Tensor add(const Tensor& a, const Tensor& b, double b_scale)
{
    Tensor out = a;
    add_inplace(out, b, b_scale);
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b)
{
    require_same(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

Tensor concat_channels(const Tensor& a, const Tensor& b)
{
    const Shape sa = a.shape();
    const Shape sb = b.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
        throw ShapeError("concat_channels: " + sa.str() + " vs " + sb.str());
    }
    Tensor out({sa.n, sa.c + sb.c, sa.h, sa.w});
    const std::size_t plane = sa.plane();
    for (int n = 0; n < sa.n; ++n) {
        std::copy_n(a.plane(n, 0), plane * sa.c, out.plane(n, 0));
        std::copy_n(b.plane(n, 0), plane * sb.c, out.plane(n, sa.c));
    }
    return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, int first)
{
    const Shape s = t.shape();
    if (first < 0 || first > s.c) {
        throw ShapeError("split_channels: split " + std::to_string(first) + " of " + s.str());
    }
    Tensor a({s.n, first, s.h, s.w});
    Tensor b({s.n, s.c - first, s.h, s.w});
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n) {
        std::copy_n(t.plane(n, 0), plane * first, a.plane(n, 0));
        std::copy_n(t.plane(n, first), plane * (s.c - first), b.plane(n, 0));
    }
    return {std::move(a), std::move(b)};
}

Tensor pad_spatial(const Tensor& t, int height, int width)
{
    const Shape s = t.shape();
    if (height < s.h || width < s.w) {
        throw ShapeError("pad_spatial: target smaller than " + s.str());
    }
    if (height == s.h && width == s.w) {
        return t;
    }
    Tensor out({s.n, s.c, height, width});
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            for (int y = 0; y < s.h; ++y) {
                std::copy_n(t.plane(n, c) + static_cast<std::size_t>(y) * s.w, s.w,
                            out.plane(n, c) + static_cast<std::size_t>(y) * width);
            }
        }
    }
    return out;
}

Tensor crop_spatial(const Tensor& t, int height, int width)
{
    const Shape s = t.shape();
    if (height > s.h || width > s.w) {
        throw ShapeError("crop_spatial: target larger than " + s.str());
    }
    if (height == s.h && width == s.w) {
        return t;
    }
    Tensor out({s.n, s.c, height, width});
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            for (int y = 0; y < height; ++y) {
                std::copy_n(t.plane(n, c) + static_cast<std::size_t>(y) * s.w, width,
                            out.plane(n, c) + static_cast<std::size_t>(y) * width);
            }
        }
    }
    return out;
}

}  // namespace crossfuse
