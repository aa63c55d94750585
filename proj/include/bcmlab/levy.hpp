#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "degseq.hpp"
#include "error.hpp"
#include "numeric.hpp"
#include "path.hpp"
#include "random.hpp"

namespace bcmlab {

struct levy_params {
    double kappa = 0.0;
    double rho = 0.0;
    double lambda = 0.0;
    std::vector<double> beta;
    double tail_l2 = 0.0;
};

inline void validate(const levy_params& p) {
    require(p.kappa >= 0 && p.rho >= 0, "kappa and rho must be non-negative");
    require(p.kappa == 0 || p.rho > 0, "kappa > 0 requires rho > 0");
    require(std::is_sorted(p.beta.begin(), p.beta.end(), std::greater<>{}), "beta must be non-increasing");
    require(p.beta.empty() || p.beta.back() >= 0, "beta must be non-negative");
    require(p.tail_l2 >= 0, "tail_l2 must be non-negative");
}

/// (a^3 kappa, a^3 rho, a^2 lambda, a beta): law of a W(a t).
inline levy_params rescale_params(const levy_params& p, double a) {
    require(a > 0, "scale factor must be positive");
    levy_params q = p;
    q.kappa *= a * a * a;
    q.rho *= a * a * a;
    q.lambda *= a * a;
    for (auto& b : q.beta) b *= a;
    q.tail_l2 *= a;
    return q;
}

/// Parameters of the sum of two independent processes.
inline levy_params merge_params(const levy_params& p1, const levy_params& p2) {
    levy_params q;
    q.kappa = p1.kappa + p2.kappa;
    q.rho = p1.rho + p2.rho;
    q.lambda = p1.lambda + p2.lambda;
    q.beta = ord_merge(p1.beta, p2.beta);
    q.tail_l2 = std::hypot(p1.tail_l2, p2.tail_l2);
    return q;
}

inline levy_params params_from_constants(const limit_constants& c) {
    levy_params p{c.kappa, c.rho, c.lambda, c.beta_merged, 0.0};
    const double sc = c.reg.heavy() ? std::pow(c.theta, 1.0 / (c.reg.tau - 1.0)) / c.mu1_l : 0.0;
    p.tail_l2 = std::hypot(c.nu_inf_r / c.mu1_l * c.beta_tail_l, sc * c.beta_tail_r);
    return p;
}

// ---------------------------------------------------------- simulation

struct levy_path {
    grid_path path;
    std::vector<std::pair<std::size_t, double>> jumps;  // (beta index, clock) for clocks within the horizon
};

struct levy_noise {
    std::vector<double> normals;  // standard normals, one per grid step
    std::vector<double> clocks;   // eta_j ~ Exp(beta_j); +inf when beta_j == 0
};

inline levy_noise draw_noise(const levy_params& p, std::size_t steps, rng_t& rng) {
    levy_noise z;
    std::normal_distribution<double> normal;
    z.normals.resize(steps);
    if (p.kappa > 0)
        for (auto& g : z.normals) g = normal(rng);
    z.clocks.resize(p.beta.size());
    for (std::size_t j = 0; j < p.beta.size(); ++j)
        z.clocks[j] = p.beta[j] > 0 ? exponential(rng, p.beta[j]) : std::numeric_limits<double>::infinity();
    return z;
}

inline std::size_t grid_steps(double dt, double T) {
    require(dt > 0 && T > 0 && dt <= T * (1 + 1e-12), "need 0 < dt <= T");
    return static_cast<std::size_t>(std::llround(std::floor(T / dt + 1e-9)));
}

/// Path on t_i = i dt, i = 0..steps, driven by the supplied noise. A clock
/// in (t_{i-1}, t_i] contributes from index i on.
inline levy_path simulate(const levy_params& p, double dt, std::size_t steps, const levy_noise& z) {
    validate(p);
    require(z.clocks.size() == p.beta.size(), "one clock per beta entry required");
    require(p.kappa == 0 || z.normals.size() >= steps, "not enough Gaussian increments");
    levy_path out;
    std::vector<double> jump_at(steps + 1, 0.0);
    compensated_sum comp;
    for (std::size_t j = 0; j < p.beta.size(); ++j) {
        comp += p.beta[j] * p.beta[j];
        const double idx = std::ceil(z.clocks[j] / dt);
        if (idx <= static_cast<double>(steps)) {
            jump_at[static_cast<std::size_t>(std::max(idx, 1.0))] += p.beta[j];
            out.jumps.emplace_back(j, z.clocks[j]);
        }
    }
    const double beta2 = comp.value();
    const double sk = std::sqrt(p.kappa * dt);
    out.path = {dt, std::vector<double>(steps + 1, 0.0)};
    compensated_sum bm, jumps;
    for (std::size_t i = 1; i <= steps; ++i) {
        if (p.kappa > 0) bm += sk * z.normals[i - 1];
        jumps += jump_at[i];
        const double t = out.path.time(i);
        out.path.values[i] = bm.value() + jumps.value() + (p.lambda - beta2) * t - 0.5 * p.rho * t * t;
    }
    return out;
}

inline levy_path simulate(const levy_params& p, double dt, double T, std::uint64_t seed) {
    const auto steps = grid_steps(dt, T);
    auto rng = make_rng(seed);
    return simulate(p, dt, steps, draw_noise(p, steps, rng));
}

/// Pure-jump path sum_j size_j 1[time_j <= t] + slope t with the same grid convention.
inline grid_path jump_path(double dt, std::size_t steps, const std::vector<double>& times,
                           const std::vector<double>& sizes, double slope) {
    require(times.size() == sizes.size(), "jump times and sizes must match");
    std::vector<double> at(steps + 1, 0.0);
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double idx = std::ceil(times[j] / dt);
        if (idx <= static_cast<double>(steps)) at[static_cast<std::size_t>(std::max(idx, 1.0))] += sizes[j];
    }
    grid_path out{dt, std::vector<double>(steps + 1, 0.0)};
    compensated_sum s;
    for (std::size_t i = 1; i <= steps; ++i) {
        s += at[i];
        out.values[i] = s.value() + slope * out.time(i);
    }
    return out;
}

// ---------------------------------------------------------- excursions

struct excursion {
    std::size_t l = 0;  // grid indices
    std::size_t r = 0;
    double length = 0.0;
    std::optional<double> mark;
};

struct excursion_set {
    double dt = 1.0;
    std::vector<excursion> top;    // longest first, ties by earlier start
    std::size_t total_count = 0;
    double rest_length = 0.0;      // summed length of excursions beyond top
    double time_at_minimum = 0.0;
    double open_tail = 0.0;        // unfinished excursion at the horizon
    std::optional<std::size_t> open_start;

    std::vector<double> lengths() const {
        std::vector<double> out;
        for (const auto& e : top) out.push_back(e.length);
        return out;
    }
};

inline excursion_set excursions(const grid_path& f, std::size_t top_k = 20) {
    excursion_set es;
    es.dt = f.dt;
    if (f.values.empty()) return es;
    std::vector<excursion> all;
    double cur_min = f.values[0];
    std::size_t min_idx = 0, min_steps = 0;
    bool open = false;
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double v = f.values[i];
        if (!open) {
            if (v <= cur_min) {
                cur_min = v;
                min_idx = i;
                ++min_steps;
            } else {
                open = true;
            }
        } else if (v <= cur_min) {
            all.push_back({min_idx, i, static_cast<double>(i - min_idx) * f.dt, std::nullopt});
            open = false;
            cur_min = v;
            min_idx = i;
        }
    }
    if (open) {
        es.open_start = min_idx;
        es.open_tail = static_cast<double>(f.size() - 1 - min_idx) * f.dt;
    }
    es.time_at_minimum = static_cast<double>(min_steps) * f.dt;
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.r - a.l > b.r - b.l; });
    es.total_count = all.size();
    for (std::size_t i = top_k; i < all.size(); ++i) es.rest_length += all[i].length;
    if (all.size() > top_k) all.resize(top_k);
    es.top = std::move(all);
    return es;
}

/// Marks g(r) - g(l) of the ordered excursions of f.
inline std::vector<double> gamma_infinity(const grid_path& f, const grid_path& g, std::size_t top_k = 20) {
    if (f.size() != g.size() || std::abs(f.dt - g.dt) > 1e-12 * std::max(1.0, f.dt))
        throw precondition_error("gamma_infinity: paths live on different grids");
    const auto es = excursions(f, top_k);
    std::vector<double> marks;
    for (const auto& e : es.top) marks.push_back(g.values[e.r] - g.values[e.l]);
    return marks;
}

inline excursion_set marked_excursions(const grid_path& f, const grid_path& g, std::size_t top_k = 20) {
    auto es = excursions(f, top_k);
    const auto marks = gamma_infinity(f, g, top_k);
    for (std::size_t i = 0; i < es.top.size(); ++i) es.top[i].mark = marks[i];
    return es;
}

// ---------------------------------------------------------- IO

inline void write_excursions_csv(std::ostream& os, const excursion_set& es) {
    os << "l,r,length,mark\n";
    for (const auto& e : es.top)
        os << format_double(static_cast<double>(e.l) * es.dt) << ',' << format_double(static_cast<double>(e.r) * es.dt)
           << ',' << format_double(e.length) << ',' << (e.mark ? format_double(*e.mark) : std::string()) << '\n';
}

inline std::vector<double> read_beta(std::istream& is) {
    std::vector<double> beta;
    std::string line;
    while (std::getline(is, line)) {
        const auto p = line.find_first_not_of(" \t\r");
        if (p == std::string::npos || line[p] == '#') continue;
        std::istringstream ls(line);
        double b;
        if (!(ls >> b) || !(b >= 0)) throw io_error("malformed beta entry: " + line);
        beta.push_back(b);
    }
    if (!std::is_sorted(beta.begin(), beta.end(), std::greater<>{})) throw io_error("beta file must be non-increasing");
    return beta;
}

} // namespace bcmlab
