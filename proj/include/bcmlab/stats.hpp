#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "error.hpp"
#include "numeric.hpp"

namespace bcmlab {

struct sample_summary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double std_error = 0.0;
};

inline sample_summary summarize(const std::vector<double>& xs) {
    sample_summary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    compensated_sum sum;
    for (double x : xs) sum += x;
    s.mean = sum.value() / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        compensated_sum sq;
        for (double x : xs) sq += (x - s.mean) * (x - s.mean);
        s.variance = sq.value() / static_cast<double>(xs.size() - 1);
        s.std_error = std::sqrt(s.variance / static_cast<double>(xs.size()));
    }
    return s;
}

/// Standard error of the unbiased sample variance (normal-free fourth-moment form).
inline double variance_std_error(const std::vector<double>& xs) {
    const auto s = summarize(xs);
    const double n = static_cast<double>(xs.size());
    if (n < 4) return 0.0;
    compensated_sum m4;
    for (double x : xs) m4 += std::pow(x - s.mean, 4);
    const double mu4 = m4.value() / n;
    const double v = s.variance;
    return std::sqrt(std::max(0.0, (mu4 - (n - 3) / (n - 1) * v * v) / n));
}

/// Linear-interpolated quantile, q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
    require(!xs.empty(), "quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), "KS distance needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Upper tail P(chi2_df > stat).
inline double chi_square_pvalue(double stat, double df) {
    require(df > 0 && stat >= 0, "chi-square needs df > 0 and stat >= 0");
    return boost::math::gamma_q(df / 2.0, stat / 2.0);
}

inline double chi_square_statistic(const std::vector<double>& observed, const std::vector<double>& expected) {
    require(observed.size() == expected.size(), "chi-square: size mismatch");
    compensated_sum s;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        require(expected[i] > 0, "chi-square: expected counts must be positive");
        s += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    }
    return s.value();
}

} // namespace bcmlab
