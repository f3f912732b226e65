#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crossfuse {

/// Dense NCHW extent.
struct Shape {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t numel() const
    {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense 4-D array of doubles with optional gradient storage of the same shape.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
    const double* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

    double& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
    double at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool has_grad() const { return !grad_.empty(); }
    /// Allocates zeroed gradient storage if absent.
    void ensure_grad();
    void zero_grad();
    void drop_grad() { grad_.clear(); }
    std::span<double> grad() { return grad_; }
    std::span<const double> grad() const { return grad_; }

    void fill(double v);

    std::size_t offset(int n, int c, int h, int w) const
    {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

private:
    Shape shape_;
    std::vector<double> data_;
    std::vector<double> grad_;
};

/// Counter-based deterministic random stream (splitmix64 over seed + counter).
class RngState {
public:
    explicit RngState(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller.
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

// Elementwise helpers. All throw ShapeError on mismatched shapes.
double dot(const Tensor& a, const Tensor& b);
void add_inplace(Tensor& dst, const Tensor& src, double scale = 1.0);
Tensor add(const Tensor& a, const Tensor& b, double b_scale = 1.0);
double max_abs_diff(const Tensor& a, const Tensor& b);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits channels [0, first) and [first, c).
std::pair<Tensor, Tensor> split_channels(const Tensor& t, int first);

/// Zero-pads bottom/right to the given spatial size.
Tensor pad_spatial(const Tensor& t, int height, int width);
/// Keeps the top-left height x width window.
Tensor crop_spatial(const Tensor& t, int height, int width);

}  // namespace crossfuse
