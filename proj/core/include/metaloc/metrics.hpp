#pragma once

#include <metaloc/scenario.hpp>

#include <span>
#include <vector>

namespace metaloc::eval {

/// Euclidean distance in cm.
double distance_error(const Position& predicted, const Position& label) noexcept;

/// Fraction of errors strictly below each threshold. Throws DataError on an empty error list.
std::vector<double> cdf(std::span<const double> errors, std::span<const double> thresholds);

/// 0, 10, ..., 300 cm, extended in 10 cm steps until every error lies strictly below the last threshold.
std::vector<double> cdf_thresholds(std::span<const double> errors, double step_cm = 10.0, double min_max_cm = 300.0);

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Quartiles use linear interpolation between order statistics. Throws DataError when empty.
Summary summarize(std::span<const double> errors);

double mean(std::span<const double> values);

} // namespace metaloc::eval
