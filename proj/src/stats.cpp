#include "anderson/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "anderson/error.hpp"

namespace anderson {

interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    if (hits > trials) throw invalid_argument("more hits than trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

line_fit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw invalid_argument("fit needs equally many x and y");
    if (x.size() < 2) throw degenerate_fit("fit needs at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw degenerate_fit("zero variance in x");
    line_fit f;
    f.points = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ssr += r * r;
        }
        f.std_error = std::sqrt(ssr / (n - 2.0) / sxx);
    }
    return f;
}

namespace {

std::vector<double> logs(std::span<const double> v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) throw degenerate_fit("log fit needs positive values");
        out[i] = std::log(v[i]);
    }
    return out;
}

} // namespace

line_fit fit_exponent(std::span<const double> x, std::span<const double> y) {
    return fit_line(logs(x), logs(y));
}

line_fit fit_log_linear(std::span<const double> x, std::span<const double> y) {
    return fit_line(x, logs(y));
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw empty_ensemble();
    if (!(q >= 0.0 && q <= 1.0)) throw invalid_argument("quantile level outside [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double ordered_sum(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0);
}

double ordered_mean(std::span<const double> values) {
    if (values.empty()) throw empty_ensemble();
    return ordered_sum(values) / static_cast<double>(values.size());
}

} // namespace anderson
