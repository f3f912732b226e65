#include "crossfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "crossfuse/errors.hpp"
#include "crossfuse/ops.hpp"

namespace crossfuse {

PrCurve& PrCurve::operator+=(const PrCurve& other)
{
    if (thresholds.empty() && counts.empty()) {
        *this = other;
        return *this;
    }
    if (thresholds != other.thresholds) {
        throw ShapeError("PrCurve: cannot sum curves with different thresholds");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] += other.counts[i];
    }
    return *this;
}

std::vector<double> uniform_thresholds(int n)
{
    if (n < 2) {
        throw DomainError("uniform_thresholds: need at least 2 thresholds");
    }
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        t[static_cast<std::size_t>(k)] = static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return t;
}

std::vector<double> distinct_thresholds(std::span<const double> confidence)
{
    std::vector<double> t(confidence.begin(), confidence.end());
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

void accumulate(PrCurve& curve, std::span<const double> confidence, std::span<const std::uint8_t> gt)
{
    if (confidence.size() != gt.size()) {
        throw ShapeError("sweep: confidence has " + std::to_string(confidence.size()) +
                         " pixels, ground truth " + std::to_string(gt.size()));
    }
    const std::size_t nt = curve.thresholds.size();
    if (curve.counts.size() != nt) {
        curve.counts.assign(nt, ConfusionCounts{});
    }
    // pos[k] / neg[k]: pixels whose confidence clears exactly thresholds 0..k-1.
    std::vector<std::uint64_t> pos(nt + 1, 0);
    std::vector<std::uint64_t> neg(nt + 1, 0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const std::uint8_t label = gt[i];
        if (label == kIgnoreLabel) {
            continue;
        }
        const double c = confidence[i];
        if (!(c >= 0.0 && c <= 1.0)) {
            throw DomainError("sweep: confidence " + std::to_string(c) + " outside [0, 1]");
        }
        const auto cleared = static_cast<std::size_t>(
            std::upper_bound(curve.thresholds.begin(), curve.thresholds.end(), c) - curve.thresholds.begin());
        (label == kRoadLabel ? pos : neg)[cleared] += 1;
    }
    // At threshold k a pixel is positive iff it cleared more than k thresholds.
    std::uint64_t pos_above = 0;
    std::uint64_t neg_above = 0;
    std::uint64_t pos_total = 0;
    std::uint64_t neg_total = 0;
    for (std::size_t k = 0; k <= nt; ++k) {
        pos_total += pos[k];
        neg_total += neg[k];
    }
    for (std::size_t k = nt; k-- > 0;) {
        pos_above += pos[k + 1];
        neg_above += neg[k + 1];
        ConfusionCounts& c = curve.counts[k];
        c.tp += pos_above;
        c.fn += pos_total - pos_above;
        c.fp += neg_above;
        c.tn += neg_total - neg_above;
    }
}

PrCurve sweep(std::span<const double> confidence, std::span<const std::uint8_t> gt,
              std::vector<double> thresholds)
{
    if (thresholds.empty() || !std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw DomainError("sweep: thresholds must be non-empty and ascending");
    }
    PrCurve curve;
    curve.thresholds = std::move(thresholds);
    accumulate(curve, confidence, gt);
    if (curve.positives() == 0) {
        throw MetricError("sweep: no road pixels in ground truth, recall undefined");
    }
    return curve;
}

PrCurve sweep(std::span<const double> confidence, std::span<const std::uint8_t> gt, int num_thresholds)
{
    return sweep(confidence, gt, uniform_thresholds(num_thresholds));
}

double precision(const ConfusionCounts& c)
{
    if (c.tp + c.fp == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionCounts& c)
{
    if (c.tp + c.fn == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

MaxFResult max_f(const PrCurve& curve)
{
    if (curve.size() == 0) {
        throw MetricError("max_f: empty curve");
    }
    MaxFResult best;
    bool found = false;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        const double p = precision(curve.counts[k]);
        const double r = recall(curve.counts[k]);
        if (std::isnan(p) || std::isnan(r) || p + r == 0.0) {
            continue;
        }
        const double f = 2.0 * p * r / (p + r);
        if (!found || f > best.maxf) {
            best = {f, p, r, curve.thresholds[k], k};
            found = true;
        }
    }
    if (!found) {
        throw MetricError("max_f: F-measure undefined at every threshold");
    }
    return best;
}

double average_precision(const PrCurve& curve)
{
    if (curve.size() == 0 || curve.positives() == 0) {
        throw MetricError("average_precision: curve has no positives");
    }
    double sum = 0.0;
    for (int level = 0; level <= 10; ++level) {
        const double r_min = level / 10.0;
        double best = 0.0;
        for (std::size_t k = 0; k < curve.size(); ++k) {
            const double p = precision(curve.counts[k]);
            const double r = recall(curve.counts[k]);
            if (!std::isnan(p) && r >= r_min) {
                best = std::max(best, p);
            }
        }
        sum += best;
    }
    return sum / 11.0;
}

std::pair<double, double> fpr_fnr(const ConfusionCounts& counts)
{
    if (counts.fp + counts.tn == 0) {
        throw MetricError("fpr: no negative pixels");
    }
    if (counts.fn + counts.tp == 0) {
        throw MetricError("fnr: no positive pixels");
    }
    return {static_cast<double>(counts.fp) / static_cast<double>(counts.fp + counts.tn),
            static_cast<double>(counts.fn) / static_cast<double>(counts.fn + counts.tp)};
}

MetricsSummary summarize(const PrCurve& curve, const std::string& name, std::size_t frames)
{
    const MaxFResult m = max_f(curve);
    MetricsSummary s;
    s.name = name;
    s.frames = frames;
    s.pixels = curve.counts.front().total();
    s.maxf = m.maxf;
    s.precision = m.precision;
    s.recall = m.recall;
    s.threshold = m.threshold;
    s.ap = average_precision(curve);
    const ConfusionCounts& c = curve.counts[m.index];
    s.fpr = c.fp + c.tn == 0 ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    s.fnr = static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
    return s;
}

std::string format_report(std::span<const MetricsSummary> rows)
{
    std::ostringstream os;
    char buf[320];
    for (const MetricsSummary& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "category=%s frames=%zu pixels=%llu maxf=%.4f ap=%.4f pre=%.4f rec=%.4f "
                      "fpr=%.4f fnr=%.4f threshold=%.6f\n",
                      r.name.c_str(), r.frames, static_cast<unsigned long long>(r.pixels), 100.0 * r.maxf,
                      100.0 * r.ap, 100.0 * r.precision, 100.0 * r.recall, 100.0 * r.fpr, 100.0 * r.fnr,
                      r.threshold);
        os << buf;
    }
    return os.str();
}

}  // namespace crossfuse
