#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace crossfuse {

/// Named view of a trainable (or probed) array and its gradient buffer.
struct ParamView {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
    /// Cross-fusion scalars are kept out of weight decay.
    bool decay = true;
};

/// A differentiable computation exposed to the checker.
///
/// `loss` must be a pure function of the current parameter values. `backward`
/// evaluates the same loss and writes d(loss)/d(param) into every view's grad
/// buffer, overwriting previous contents.
struct GradCheckTarget {
    std::function<double()> loss;
    std::function<void()> backward;
    std::vector<ParamView> params;
};

struct GradCheckOptions {
    double step = 1e-6;
    /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
    double floor = 1e-2;
    /// 0 checks every entry; otherwise an evenly strided subset per view.
    std::size_t max_entries_per_param = 0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Compares analytic gradients with central finite differences.
GradCheckReport gradient_check(const GradCheckTarget& target, double tolerance,
                               const GradCheckOptions& options = {});

}  // namespace crossfuse
