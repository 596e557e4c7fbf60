#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace anderson {

struct interval {
    double lower = 0.0;
    double upper = 0.0;
};

// Wilson score interval for hits / trials at the given normal quantile.
interval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.959963984540054);

struct line_fit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0; // of the slope; 0 with two points
    std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope x.
line_fit fit_line(std::span<const double> x, std::span<const double> y);
// Slope in log-log coordinates; x and y must be positive.
line_fit fit_exponent(std::span<const double> x, std::span<const double> y);
// Fit of ln y against x; -slope is an exponential decay rate.
line_fit fit_log_linear(std::span<const double> x, std::span<const double> y);

// Linear interpolation between order statistics, q in [0, 1].
double quantile(std::span<const double> values, double q);

// Sum of the values taken in ascending order, independent of input order.
double ordered_sum(std::span<const double> values);
double ordered_mean(std::span<const double> values);

} // namespace anderson
