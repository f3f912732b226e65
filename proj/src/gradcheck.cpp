#include "crossfuse/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace crossfuse {

GradCheckReport gradient_check(const GradCheckTarget& target, double tolerance,
                               const GradCheckOptions& options)
{
    GradCheckReport report;
    report.tolerance = tolerance;

    target.backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(target.params.size());
    for (const ParamView& p : target.params) {
        analytic.emplace_back(p.grad.begin(), p.grad.end());
    }

    for (std::size_t pi = 0; pi < target.params.size(); ++pi) {
        const ParamView& p = target.params[pi];
        const std::size_t n = p.value.size();
        std::size_t stride = 1;
        if (options.max_entries_per_param > 0 && n > options.max_entries_per_param) {
            stride = (n + options.max_entries_per_param - 1) / options.max_entries_per_param;
        }
        for (std::size_t i = 0; i < n; i += stride) {
            const double saved = p.value[i];
            p.value[i] = saved + options.step;
            const double plus = target.loss();
            p.value[i] = saved - options.step;
            const double minus = target.loss();
            p.value[i] = saved;

            const double numeric = (plus - minus) / (2.0 * options.step);
            const double a = analytic[pi][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
            const double rel = std::abs(a - numeric) / denom;
            ++report.checked;
            if (rel > report.max_relative_error || report.checked == 1) {
                if (rel >= report.max_relative_error) {
                    report.max_relative_error = rel;
                    report.worst_param = p.name;
                    report.worst_index = i;
                    report.worst_analytic = a;
                    report.worst_numeric = numeric;
                }
            }
        }
    }
    report.passed = std::isfinite(report.max_relative_error) && report.max_relative_error < tolerance;
    return report;
}

}  // namespace crossfuse
