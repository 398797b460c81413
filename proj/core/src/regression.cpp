#include "cascadelab/regression.hpp"

#include <algorithm>
#include <cmath>

#include "cascadelab/error.hpp"

namespace cascadelab {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw Error(ErrorKind::InsufficientRange, "line fit needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0) throw Error(ErrorKind::InsufficientRange, "line fit needs distinct abscissae");

    LineFit fit;
    fit.points = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double rss = std::max(0.0, syy - fit.slope * sxy);
    fit.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
    fit.slope_stderr = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
    return fit;
}

WeightedMean weighted_mean(std::span<const double> values, std::span<const double> weights) {
    double sw = 0, swx = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        swx += weights[i] * values[i];
    }
    if (sw <= 0) throw Error(ErrorKind::Extinct, "all importance weights are zero");
    WeightedMean out;
    out.mean = swx / sw;
    double acc = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = weights[i] * (values[i] - out.mean);
        acc += d * d;
    }
    out.standard_error = std::sqrt(acc) / sw;
    return out;
}

WeightedMean sample_mean(std::span<const double> values) {
    WeightedMean out;
    const std::size_t n = values.size();
    if (n == 0) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(n);
    if (n > 1) {
        double ss = 0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.standard_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return out;
}

double quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

}  // namespace cascadelab
