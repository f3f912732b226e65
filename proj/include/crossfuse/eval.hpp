#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crossfuse {

/// Road / not-road / ignore label values used by ground truth and metrics.
inline constexpr std::uint8_t kRoadLabel = 1;
inline constexpr std::uint8_t kNotRoadLabel = 0;

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
    ConfusionCounts& operator+=(const ConfusionCounts& o)
    {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

/// Confusion counts at ascending thresholds; a pixel is predicted road when
/// its confidence is >= the threshold.
struct PrCurve {
    std::vector<double> thresholds;
    std::vector<ConfusionCounts> counts;

    std::size_t size() const { return thresholds.size(); }
    std::uint64_t positives() const { return counts.empty() ? 0 : counts.front().tp + counts.front().fn; }
    /// Micro-averaging: sums counts of a curve with identical thresholds.
    PrCurve& operator+=(const PrCurve& other);
};

/// `n` evenly spaced thresholds k / (n - 1), k = 0..n-1.
std::vector<double> uniform_thresholds(int n = 255);
/// Sorted distinct confidence values.
std::vector<double> distinct_thresholds(std::span<const double> confidence);

/// Adds the pixels of one map to `curve` (must already hold the thresholds).
/// Ignored pixels are skipped; no positivity requirement.
void accumulate(PrCurve& curve, std::span<const double> confidence, std::span<const std::uint8_t> gt);

/// Threshold sweep over one confidence map. Throws MetricError when no
/// ground-truth pixel is road, DomainError for confidence outside [0, 1] or
/// ShapeError when sizes differ.
PrCurve sweep(std::span<const double> confidence, std::span<const std::uint8_t> gt, int num_thresholds = 255);
PrCurve sweep(std::span<const double> confidence, std::span<const std::uint8_t> gt,
              std::vector<double> thresholds);

/// Empty optional-like results are reported as NaN by these helpers.
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);

struct MaxFResult {
    double maxf = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double threshold = 0.0;
    std::size_t index = 0;
};

/// F = 2 PR / (P + R) maximized over thresholds; ties go to the lower threshold.
MaxFResult max_f(const PrCurve& curve);

/// 11-point interpolated average precision over recall levels 0, 0.1, ..., 1.
double average_precision(const PrCurve& curve);

/// (fp / (fp + tn), fn / (fn + tp)); MetricError when a denominator is 0.
std::pair<double, double> fpr_fnr(const ConfusionCounts& counts);

struct MetricsSummary {
    std::string name;
    std::size_t frames = 0;
    std::uint64_t pixels = 0;
    double maxf = 0.0;
    double ap = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double threshold = 0.0;
};

/// All metrics at the MaxF threshold.
MetricsSummary summarize(const PrCurve& curve, const std::string& name = "all", std::size_t frames = 0);

/// One `key=value` line per summary.
std::string format_report(std::span<const MetricsSummary> rows);

}  // namespace crossfuse
