#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "error.hpp"
#include "numeric.hpp"
#include "path.hpp"
#include "random.hpp"

namespace bcmlab {

/// Positive weights w with attached values u and the power sums
/// sigma(p, q) = sum w^p u^q for p, q <= 3.
class weighted_sequence {
public:
    weighted_sequence(std::vector<double> w, std::vector<double> u) : w_(std::move(w)), u_(std::move(u)) {
        require(w_.size() == u_.size(), "weights and values must have equal length");
        require(!w_.empty(), "weighted sequence must be non-empty");
        for (double x : w_) require(x > 0 && std::isfinite(x), "weights must be positive and finite");
        for (double x : u_) require(x >= 0 && std::isfinite(x), "values must be non-negative and finite");
        for (int p = 0; p <= 3; ++p)
            for (int q = 0; q <= 3; ++q) {
                compensated_sum s;
                for (std::size_t j = 0; j < w_.size(); ++j) s += std::pow(w_[j], p) * std::pow(u_[j], q);
                sigma_[p][q] = s.value();
            }
    }

    std::size_t size() const noexcept { return w_.size(); }
    const std::vector<double>& w() const noexcept { return w_; }
    const std::vector<double>& u() const noexcept { return u_; }
    double sigma(int p, int q) const { return sigma_.at(p).at(q); }

    /// The centering constant that makes a single weight class with u = w exact.
    double plug_in_gamma(double eps) const { return sigma(1, 0) * eps / sigma(2, 0); }

private:
    std::vector<double> w_, u_;
    std::array<std::array<double, 4>, 4> sigma_{};
};

/// Exponential clocks xi_j ~ Exp(w_j), one per letter.
inline std::vector<double> draw_clocks(const weighted_sequence& ws, rng_t& rng) {
    std::vector<double> xi(ws.size());
    for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = exponential(rng, ws.w()[j]);
    return xi;
}

inline std::vector<std::size_t> order_by_clocks(const std::vector<double>& xi) {
    std::vector<std::size_t> pi(xi.size());
    std::iota(pi.begin(), pi.end(), std::size_t{0});
    std::sort(pi.begin(), pi.end(), [&](auto a, auto b) { return xi[a] < xi[b] || (xi[a] == xi[b] && a < b); });
    return pi;
}

/// Size-biased random permutation (0-based letters).
inline std::vector<std::size_t> sample_permutation(const weighted_sequence& ws, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return order_by_clocks(draw_clocks(ws, rng));
}

/// Exact probability of a given ordering under size-biased sampling.
inline double permutation_probability(const weighted_sequence& ws, const std::vector<std::size_t>& pi) {
    double rest = 0;
    for (auto j : pi) rest += ws.w()[j];
    double p = 1;
    for (auto j : pi) {
        p *= ws.w()[j] / rest;
        rest -= ws.w()[j];
    }
    return p;
}

struct partial_sum_path {
    std::vector<std::size_t> perm;
    std::vector<double> Y;  // Y[k] = sum of the first k values, Y[0] = 0
};

inline partial_sum_path partial_sum_process(const weighted_sequence& ws, std::size_t horizon, std::uint64_t seed) {
    require(horizon <= ws.size(), "horizon exceeds sequence length");
    partial_sum_path out;
    out.perm = sample_permutation(ws, seed);
    out.Y.resize(horizon + 1, 0.0);
    compensated_sum s;
    for (std::size_t k = 0; k < horizon; ++k) {
        s += ws.u()[out.perm[k]];
        out.Y[k + 1] = s.value();
    }
    return out;
}

/// sigma2^{-1} (Y(floor(t/eps)) - sigma11 / (sigma2 gamma_n) t) on t_i = i dt.
inline grid_path centered_fluctuation(const partial_sum_path& path, const weighted_sequence& ws, double eps,
                                      double gamma_n, double dt, std::size_t points) {
    require(eps > 0 && gamma_n > 0 && dt > 0, "eps, gamma_n and dt must be positive");
    const double s2 = ws.sigma(2, 0), s11 = ws.sigma(1, 1);
    grid_path out{dt, std::vector<double>(points)};
    const auto horizon = path.Y.size() - 1;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = out.time(i);
        const auto k = static_cast<std::size_t>(std::floor(t / eps + 1e-9));
        require(k <= horizon, "grid extends beyond the partial-sum horizon");
        out.values[i] = (path.Y[k] - s11 / (s2 * gamma_n) * t) / s2;
    }
    return out;
}

struct clock_paths {
    grid_path X;  // sum of u_j over clocks rung by t / sigma2
    grid_path F;  // eps times the number of clocks rung
    std::vector<double> clocks;
};

inline clock_paths clock_process(const weighted_sequence& ws, double eps, double dt, std::size_t points,
                                 std::uint64_t seed) {
    require(dt > 0 && eps > 0, "dt and eps must be positive");
    auto rng = make_rng(seed);
    clock_paths out;
    out.clocks = draw_clocks(ws, rng);
    const auto order = order_by_clocks(out.clocks);
    const double s2 = ws.sigma(2, 0);
    out.X = {dt, std::vector<double>(points)};
    out.F = {dt, std::vector<double>(points)};
    std::size_t fired = 0;
    compensated_sum x;
    for (std::size_t i = 0; i < points; ++i) {
        const double limit = out.X.time(i) / s2;
        while (fired < order.size() && out.clocks[order[fired]] <= limit) x += ws.u()[order[fired++]];
        out.X.values[i] = x.value();
        out.F.values[i] = eps * static_cast<double>(fired);
    }
    return out;
}

} // namespace bcmlab
