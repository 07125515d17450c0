#include <metaloc/errors.hpp>
#include <metaloc/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metaloc::eval {

double distance_error(const Position& predicted, const Position& label) noexcept {
    return std::hypot(predicted[0] - label[0], predicted[1] - label[1]);
}

std::vector<double> cdf(std::span<const double> errors, std::span<const double> thresholds) {
    if (errors.empty()) throw DataError("cdf: empty error list");
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        out.push_back(static_cast<double>(below) / static_cast<double>(sorted.size()));
    }
    return out;
}

std::vector<double> cdf_thresholds(std::span<const double> errors, double step_cm, double min_max_cm) {
    const double worst = errors.empty() ? 0.0 : *std::max_element(errors.begin(), errors.end());
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * step_cm;
        out.push_back(t);
        if (t >= min_max_cm && t > worst) break;
    }
    return out;
}

namespace {
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}
} // namespace

double mean(std::span<const double> values) {
    if (values.empty()) throw DataError("mean: empty list");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Summary summarize(std::span<const double> errors) {
    if (errors.empty()) throw DataError("summarize: empty error list");
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    Summary s;
    s.count = sorted.size();
    s.mean = mean(sorted);
    s.median = quantile(sorted, 0.5);
    s.q1 = quantile(sorted, 0.25);
    s.q3 = quantile(sorted, 0.75);
    s.min = sorted.front();
    s.max = sorted.back();
    return s;
}

} // namespace metaloc::eval
