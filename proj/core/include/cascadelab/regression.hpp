#pragma once

#include <cstddef>
#include <span>

namespace cascadelab {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x. Needs >= 2 points with
// distinct x. r2 is 1 when y is exactly constant.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct WeightedMean {
    double mean = 0.0;
    double standard_error = 0.0;
};

// Self-normalized weighted mean with delta-method standard error.
WeightedMean weighted_mean(std::span<const double> values, std::span<const double> weights);

// Plain sample mean and standard error of the mean.
WeightedMean sample_mean(std::span<const double> values);

double quantile(std::span<const double> sorted, double q);

}  // namespace cascadelab
