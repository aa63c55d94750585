#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace bcmlab {

using degree_vec = std::vector<std::int64_t>;

enum class regime_kind { finite_third, heavy_tail };

struct regime {
    regime_kind kind = regime_kind::finite_third;
    double tau = 0.0;

    static regime finite_third() { return {}; }
    static regime heavy_tail(double tau) {
        require(tau > 3.0 && tau < 4.0, "heavy-tail exponent tau must lie in (3,4)");
        return {regime_kind::heavy_tail, tau};
    }
    bool heavy() const noexcept { return kind == regime_kind::heavy_tail; }

    std::string token() const {
        if (!heavy()) return "finite3";
        std::ostringstream os;
        os.precision(17);
        os << "heavy:" << tau;
        return os.str();
    }
    static regime parse(const std::string& tok) {
        if (tok == "finite3") return finite_third();
        if (tok.rfind("heavy:", 0) == 0) {
            try {
                return heavy_tail(std::stod(tok.substr(6)));
            } catch (const std::logic_error&) {
                throw io_error("bad regime token: " + tok);
            }
        }
        throw io_error("bad regime token: " + tok);
    }
    bool operator==(const regime&) const = default;
};

struct degree_sequence_pair {
    degree_vec d_l;
    degree_vec d_r;
    double theta_target = 1.0;
    double lambda = 0.0;
    regime reg;

    std::int64_t n() const noexcept { return static_cast<std::int64_t>(d_l.size()); }
    std::int64_t m() const noexcept { return static_cast<std::int64_t>(d_r.size()); }
    std::int64_t half_edges() const noexcept {
        std::int64_t s = 0;
        for (auto d : d_l) s += d;
        return s;
    }
    double theta() const noexcept { return static_cast<double>(m()) / static_cast<double>(n()); }
};

inline bool is_non_increasing(const degree_vec& d) {
    return std::is_sorted(d.begin(), d.end(), std::greater<>{});
}

inline void validate(const degree_sequence_pair& p) {
    require(!p.d_l.empty() && !p.d_r.empty(), "degree sequences must be non-empty");
    for (const auto* d : {&p.d_l, &p.d_r}) {
        require(is_non_increasing(*d), "degree sequences must be non-increasing");
        require(d->back() >= 1, "all degrees must be at least 1");
    }
    std::int64_t sl = 0, sr = 0;
    for (auto d : p.d_l) sl += d;
    for (auto d : p.d_r) sr += d;
    require(sl == sr, "degree sums differ: " + std::to_string(sl) + " vs " + std::to_string(sr));
    require(p.theta_target > 0.0, "theta must be positive");
}

/// Sorts both sides non-increasingly and validates.
inline degree_sequence_pair make_pair(degree_vec d_l, degree_vec d_r, double theta_target = 0.0,
                                      double lambda = 0.0, regime reg = {}) {
    std::sort(d_l.begin(), d_l.end(), std::greater<>{});
    std::sort(d_r.begin(), d_r.end(), std::greater<>{});
    degree_sequence_pair p{std::move(d_l), std::move(d_r), theta_target, lambda, reg};
    if (p.theta_target <= 0.0 && !p.d_l.empty()) p.theta_target = p.theta();
    validate(p);
    return p;
}

// ---------------------------------------------------------------- moments

/// Exact power sums S_p = sum d^p for p = 0..4.
struct power_sums {
    std::array<std::int64_t, 5> s{};

    explicit power_sums(const degree_vec& d) {
        for (auto x : d) {
            std::int64_t v = 1;
            for (int p = 0; p <= 4; ++p) {
                s[p] += v;
                v *= x;
            }
        }
    }
    std::int64_t operator[](int p) const { return s[p]; }
};

struct moment_summary {
    std::array<double, 5> mu_l{};  // index p = 1..4; slot 0 unused
    std::array<double, 5> mu_r{};
    double nu_l = 0.0;
    double nu_r = 0.0;
    double nu = 0.0;
};

namespace detail {

inline std::array<double, 5> normalized(const power_sums& s) {
    std::array<double, 5> mu{};
    for (int p = 1; p <= 4; ++p) mu[p] = static_cast<double>(s[p]) / static_cast<double>(s[0]);
    return mu;
}

inline double side_nu(const power_sums& s) {
    return static_cast<double>(s[2] - s[1]) / static_cast<double>(s[1]);
}

} // namespace detail

inline moment_summary moments(const degree_vec& d_l, const degree_vec& d_r) {
    power_sums sl(d_l), sr(d_r);
    moment_summary ms;
    ms.mu_l = detail::normalized(sl);
    ms.mu_r = detail::normalized(sr);
    ms.nu_l = detail::side_nu(sl);
    ms.nu_r = detail::side_nu(sr);
    ms.nu = ms.nu_l * ms.nu_r;
    return ms;
}

inline moment_summary moments(const degree_sequence_pair& p) { return moments(p.d_l, p.d_r); }

inline double criticality(const degree_vec& d_l, const degree_vec& d_r) {
    return moments(d_l, d_r).nu;
}

// ---------------------------------------------------------- scaling regime

struct scaling_regime {
    double a_n = 1.0;
    double b_n = 1.0;
    double c_n = 1.0;
    std::int64_t n = 1;
};

inline scaling_regime make_scaling(const regime& reg, std::int64_t n) {
    require(n >= 1, "n must be positive");
    const double x = static_cast<double>(n);
    if (!reg.heavy()) return {std::cbrt(x), std::pow(x, 2.0 / 3.0), std::cbrt(x), n};
    const double t = reg.tau;
    return {std::pow(x, 1.0 / (t - 1.0)), std::pow(x, (t - 2.0) / (t - 1.0)),
            std::pow(x, (t - 3.0) / (t - 1.0)), n};
}

// ---------------------------------------------------------- ORD merge

/// Decreasing rearrangement of the union of two non-increasing sequences.
template <class T>
std::vector<T> ord_merge(const std::vector<T>& x, const std::vector<T>& y) {
    for (const auto* v : {&x, &y}) {
        require(std::is_sorted(v->begin(), v->end(), std::greater<>{}), "ord_merge inputs must be non-increasing");
        require(v->empty() || v->back() >= T{}, "ord_merge inputs must be non-negative");
    }
    std::vector<T> out(x.size() + y.size());
    std::merge(x.begin(), x.end(), y.begin(), y.end(), out.begin(), std::greater<>{});
    return out;
}

// ---------------------------------------------------------- limit constants

struct limit_constants {
    double kappa_l = 0, kappa_r = 0, rho_l = 0, rho_r = 0;
    double nu_inf_l = 0, nu_inf_r = 0;
    double kappa = 0, rho = 0, lambda = 0;
    double theta = 1, mu1_l = 1, mu1_r = 1;
    std::vector<double> beta_l, beta_r, beta_merged;
    // l2 mass of the discarded beta tails
    double beta_tail_l = 0, beta_tail_r = 0;
    regime reg;
};

/// Finite-third constants from first three moments of each side.
inline limit_constants constants_from_moments(const std::array<double, 5>& mu_l,
                                              const std::array<double, 5>& mu_r, double theta,
                                              double lambda) {
    auto side = [](const std::array<double, 5>& mu, double& kap, double& rh, double& nuinf) {
        const double num = mu[3] * mu[1] - mu[2] * mu[2];
        kap = num / (mu[1] * mu[1]);
        rh = num / (mu[1] * mu[1] * mu[1]);
        nuinf = (mu[2] - mu[1]) / mu[1];
    };
    limit_constants c;
    side(mu_l, c.kappa_l, c.rho_l, c.nu_inf_l);
    side(mu_r, c.kappa_r, c.rho_r, c.nu_inf_r);
    const double nr3 = c.nu_inf_r * c.nu_inf_r * c.nu_inf_r;
    c.kappa = nr3 * c.kappa_l + c.kappa_r;
    c.rho = nr3 * c.rho_l + c.rho_r / theta;
    c.lambda = lambda;
    c.theta = theta;
    c.mu1_l = mu_l[1];
    c.mu1_r = mu_r[1];
    return c;
}

inline constexpr std::size_t beta_truncation = 1000;

inline limit_constants compute_limit_constants(const degree_sequence_pair& p, double lambda) {
    validate(p);
    power_sums sl(p.d_l), sr(p.d_r);
    // exact integer check of S3*S1 - S2^2 on each side
    auto excess = [](const power_sums& s) {
        return static_cast<__int128>(s[3]) * s[1] - static_cast<__int128>(s[2]) * s[2];
    };
    const __int128 el = excess(sl), er = excess(sr);
    if (el < 0 || er < 0 || el + er <= 0)
        throw degeneracy_error("degenerate degree sequences: mu3*mu1 <= mu2^2 on both sides");

    const auto ms = moments(p);
    limit_constants c = constants_from_moments(ms.mu_l, ms.mu_r, p.theta(), lambda);
    c.reg = p.reg;
    if (!p.reg.heavy()) return c;

    // heavy-tail: Gaussian parts vanish, hubs carry the jumps
    c.kappa_l = c.kappa_r = c.rho_l = c.rho_r = c.kappa = c.rho = 0.0;
    const double tau = p.reg.tau;
    const double an = make_scaling(p.reg, p.n()).a_n;
    const double am = make_scaling(p.reg, p.m()).a_n;
    auto betas = [](const degree_vec& d, double a, std::vector<double>& out, double& tail) {
        const std::size_t j = std::min(d.size(), beta_truncation);
        out.resize(j);
        for (std::size_t i = 0; i < j; ++i) out[i] = static_cast<double>(d[i]) / a;
        double t = 0;
        for (std::size_t i = j; i < d.size(); ++i) t += std::pow(static_cast<double>(d[i]) / a, 2);
        tail = std::sqrt(t);
    };
    betas(p.d_l, an, c.beta_l, c.beta_tail_l);
    betas(p.d_r, am, c.beta_r, c.beta_tail_r);
    std::vector<double> xl(c.beta_l), xr(c.beta_r);
    for (auto& b : xl) b *= c.nu_inf_r / c.mu1_l;
    const double sc = std::pow(c.theta, 1.0 / (tau - 1.0)) / c.mu1_l;
    for (auto& b : xr) b *= sc;
    c.beta_merged = ord_merge(xl, xr);
    return c;
}

// ---------------------------------------------------------- laws

/// Discrete law on {1, ..., K}: pmf[k] = P(D = k), pmf[0] must be 0.
struct discrete_law {
    std::vector<double> pmf;

    std::int64_t max_support() const {
        for (std::size_t k = pmf.size(); k-- > 0;)
            if (pmf[k] > 0) return static_cast<std::int64_t>(k);
        return 0;
    }
    double mean() const {
        double s = 0;
        for (std::size_t k = 0; k < pmf.size(); ++k) s += static_cast<double>(k) * pmf[k];
        return s;
    }
    /// Smallest k with F(k) > q.
    std::int64_t quantile(double q) const {
        double f = 0;
        for (std::size_t k = 1; k < pmf.size(); ++k) {
            f += pmf[k];
            if (f > q) return static_cast<std::int64_t>(k);
        }
        return max_support();
    }
};

/// Poisson(mean) conditioned on {1, ..., kmax}.
inline discrete_law truncated_poisson(double mean, std::int64_t kmax) {
    require(mean > 0 && kmax >= 1, "truncated_poisson needs mean > 0 and kmax >= 1");
    discrete_law law;
    law.pmf.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
    double w = std::exp(-mean), tot = 0;
    for (std::int64_t k = 1; k <= kmax; ++k) {
        w *= mean / static_cast<double>(k);
        law.pmf[k] = w;
        tot += w;
    }
    for (auto& x : law.pmf) x /= tot;
    return law;
}

inline std::int64_t default_poisson_cap(std::int64_t n) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::cbrt(static_cast<double>(n)) + 1e-9)));
}

// ---------------------------------------------------------- construction

namespace detail {

/// Stratified quantile sample of size len, non-increasing.
inline degree_vec stratified_sample(const discrete_law& law, std::int64_t len, double u) {
    degree_vec d(static_cast<std::size_t>(len));
    for (std::int64_t i = 0; i < len; ++i)
        d[i] = law.quantile((static_cast<double>(i) + u) / static_cast<double>(len));
    std::sort(d.begin(), d.end(), std::greater<>{});
    return d;
}

inline degree_vec quantile_rule(std::int64_t len, double tau) {
    degree_vec d(static_cast<std::size_t>(len));
    const double e = 1.0 / (tau - 1.0);
    for (std::int64_t i = 1; i <= len; ++i)
        d[i - 1] = std::max<std::int64_t>(
            1, std::llround(std::pow(static_cast<double>(len) / static_cast<double>(i), e)));
    return d;
}

} // namespace detail

/// Raises the largest entries of the lighter side by one each until sums agree.
inline void balance(degree_vec& d_l, degree_vec& d_r) {
    std::int64_t sl = 0, sr = 0;
    for (auto d : d_l) sl += d;
    for (auto d : d_r) sr += d;
    degree_vec& low = sl < sr ? d_l : d_r;
    std::int64_t deficit = sl < sr ? sr - sl : sl - sr;
    while (deficit > 0) {
        const auto k = std::min<std::int64_t>(deficit, static_cast<std::int64_t>(low.size()));
        for (std::int64_t i = 0; i < k; ++i) ++low[i];
        deficit -= k;
    }
}

inline degree_vec quantile_degrees(std::int64_t n, double tau) {
    require(tau > 3.0 && tau < 4.0, "tau must lie in (3,4)");
    require(n >= 1, "n must be positive");
    return detail::quantile_rule(n, tau);
}

struct tuning_options {
    double tolerance_factor = 1e-2;
    int max_iterations = 200;
};

namespace detail {

/// Core degrees of a given length for the l side (false) or r side (true).
using core_builder = std::function<degree_vec(bool, std::int64_t)>;

inline std::int64_t sum_of(const degree_vec& d) {
    std::int64_t s = 0;
    for (auto x : d) s += x;
    return s;
}

/// Pads the side with the smaller core sum by x degree-1 vertices and the
/// other side by the count that brings the two sums closest, then balances.
inline std::pair<degree_vec, degree_vec> padded_pair(const core_builder& core, std::int64_t n,
                                                     std::int64_t m, std::int64_t x) {
    auto total = [&](bool right, std::int64_t pad) {
        const std::int64_t size = right ? m : n;
        return sum_of(core(right, size - pad)) + pad;
    };
    const bool a_right = total(false, 0) > total(true, 0);
    const std::int64_t size_a = a_right ? m : n, size_b = a_right ? n : m;
    x = std::min(x, size_a - 1);
    const std::int64_t target = total(a_right, x);
    std::int64_t lo = 0, hi = size_b - 1;  // total(b, .) is non-increasing
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo + 1) / 2;
        if (total(!a_right, mid) >= target)
            lo = mid;
        else
            hi = mid - 1;
    }
    const std::int64_t xl = a_right ? lo : x, xr = a_right ? x : lo;
    degree_vec l = core(false, n - xl), r = core(true, m - xr);
    l.insert(l.end(), xl, 1);
    r.insert(r.end(), xr, 1);
    balance(l, r);
    return {std::move(l), std::move(r)};
}

/// Converts y degree-1 vertices to degree 2 on both sides (y < 0: the reverse).
inline bool shift_ones_twos(degree_vec& d, std::int64_t y) {
    const auto ones = std::count(d.begin(), d.end(), 1);
    const auto twos = std::count(d.begin(), d.end(), 2);
    if (y > ones || -y > twos) return false;
    if (y == 0) return true;
    // sequences are non-increasing: the 1-block is the tail, the 2-block precedes it
    const auto first_one = d.size() - static_cast<std::size_t>(ones);
    if (y > 0)
        for (std::int64_t i = 0; i < y; ++i) d[first_one + i] = 2;
    else
        for (std::int64_t i = 0; i < -y; ++i) d[first_one - 1 - i] = 1;
    return true;
}

template <class Build>
inline degree_sequence_pair tune(const Build& build, std::int64_t n, std::int64_t m,
                                 double target, double tol, const tuning_options& opt,
                                 double theta, double lambda, regime reg) {
    int iters = 0;
    double last_nu = 0;
    auto eval = [&](std::int64_t x) {
        if (++iters > opt.max_iterations)
            throw tuning_error("critical tuning exceeded iteration budget", last_nu);
        auto [l, r] = build(x);
        last_nu = criticality(l, r);
        return std::make_tuple(std::move(l), std::move(r), last_nu);
    };
    auto finish = [&](degree_vec l, degree_vec r) {
        return make_pair(std::move(l), std::move(r), theta, lambda, reg);
    };

    const std::int64_t xmax = std::min(n, m) - 1;
    auto [l0, r0, nu0] = eval(0);
    if (std::abs(nu0 - target) <= tol) return finish(std::move(l0), std::move(r0));

    std::int64_t x = 0;
    degree_vec base_l = l0, base_r = r0;
    if (nu0 > target) {
        // nu is not monotone near xmax (balancing concentrates mass), so scan a grid
        const std::int64_t probes = std::min<std::int64_t>(32, xmax);
        std::int64_t lo = 0, hi = -1;  // nu(lo) > target >= nu(hi)
        double best = nu0;
        for (std::int64_t k = 1; k <= probes; ++k) {
            const std::int64_t xk = xmax * k / probes;
            auto [lk, rk, nuk] = eval(xk);
            best = std::min(best, nuk);
            if (std::abs(nuk - target) <= tol) return finish(std::move(lk), std::move(rk));
            if (nuk <= target) {
                hi = xk;
                break;
            }
            lo = xk;
        }
        if (hi < 0) throw tuning_error("padding cannot lower nu to target", best);
        while (hi - lo > 1) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            auto [lm, rm, num] = eval(mid);
            (num > target ? lo : hi) = mid;
        }
        x = hi;
        auto [lx, rx, nux] = eval(x);
        if (std::abs(nux - target) <= tol) return finish(std::move(lx), std::move(rx));
        base_l = std::move(lx);
        base_r = std::move(rx);
    }

    // fine knob: 1 <-> 2 conversions on both sides keep the sums balanced
    auto fine = [&](std::int64_t y) -> std::optional<std::tuple<degree_vec, degree_vec, double>> {
        degree_vec l = base_l, r = base_r;
        if (!shift_ones_twos(l, y) || !shift_ones_twos(r, y)) return std::nullopt;
        if (++iters > opt.max_iterations)
            throw tuning_error("critical tuning exceeded iteration budget", last_nu);
        last_nu = criticality(l, r);
        return std::make_tuple(std::move(l), std::move(r), last_nu);
    };
    auto count = [](const degree_vec& d, std::int64_t v) { return std::count(d.begin(), d.end(), v); };
    const std::int64_t ymax = std::min(count(base_l, 1), count(base_r, 1));
    const std::int64_t ymin = -std::min(count(base_l, 2), count(base_r, 2));
    // nu is increasing in y; find the crossing
    std::int64_t lo = ymin, hi = ymax;
    auto f_lo = fine(lo), f_hi = fine(hi);
    if (std::get<2>(*f_hi) < target - tol || std::get<2>(*f_lo) > target + tol)
        throw tuning_error("fine tuning range does not bracket target", last_nu);
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        auto fm = fine(mid);
        (std::get<2>(*fm) < target ? lo : hi) = mid;
    }
    for (std::int64_t y : {lo, hi}) {
        auto f = fine(y);
        if (f && std::abs(std::get<2>(*f) - target) <= tol)
            return finish(std::move(std::get<0>(*f)), std::move(std::get<1>(*f)));
    }
    throw tuning_error("could not reach target nu within tolerance", last_nu);
}

} // namespace detail

inline degree_sequence_pair build_finite_third(std::int64_t n, double theta, double lambda,
                                               const discrete_law& base_law, std::uint64_t seed,
                                               const tuning_options& opt = {}) {
    require(n >= 2, "n must be at least 2");
    require(theta > 0, "theta must be positive");
    require(base_law.mean() >= 1.0 - 1e-12, "base law must have mean >= 1");
    require(!base_law.pmf.empty() && base_law.pmf[0] == 0.0, "base law must live on {1,2,...}");
    require(static_cast<double>(base_law.max_support()) <= std::cbrt(static_cast<double>(n)) + 1e-9,
            "base law support exceeds n^(1/3)");
    const std::int64_t m = std::llround(theta * static_cast<double>(n));
    require(m >= 2, "theta*n must round to at least 2");

    auto rng = make_rng(seed);
    const double ul = uniform01(rng), ur = uniform01(rng);
    const detail::core_builder core = [&](bool right, std::int64_t len) {
        return detail::stratified_sample(base_law, len, right ? ur : ul);
    };
    auto build = [&](std::int64_t x) { return detail::padded_pair(core, n, m, x); };
    const double cn = std::cbrt(static_cast<double>(n));
    return detail::tune(build, n, m, 1.0 + lambda / cn, opt.tolerance_factor / cn, opt, theta, lambda,
                        regime::finite_third());
}

/// Quantile-rule sequences on both sides. With tune_to_critical the pair is
/// additionally padded with degree-1 vertices to sit at 1 + lambda / c_n.
inline degree_sequence_pair build_heavy_tail(std::int64_t n, double theta, double lambda, double tau,
                                             std::uint64_t seed, bool tune_to_critical = true,
                                             const tuning_options& opt = {}) {
    (void)seed;  // the construction is deterministic
    require(tau > 3.0 && tau < 4.0, "tau must lie in (3,4)");
    require(theta > 0, "theta must be positive");
    const std::int64_t m = std::llround(theta * static_cast<double>(n));
    require(n >= 2 && m >= 2, "n and theta*n must be at least 2");
    require(std::llround(std::pow(static_cast<double>(std::min(n, m)), 1.0 / (tau - 1.0))) >= 2,
            "n too small: quantile rule gives max degree 1");
    const auto reg = regime::heavy_tail(tau);
    if (!tune_to_critical) {
        degree_vec l = detail::quantile_rule(n, tau), r = detail::quantile_rule(m, tau);
        balance(l, r);
        return make_pair(std::move(l), std::move(r), theta, lambda, reg);
    }
    const detail::core_builder core = [&](bool, std::int64_t len) {
        return detail::quantile_rule(len, tau);
    };
    auto build = [&](std::int64_t x) { return detail::padded_pair(core, n, m, x); };
    const double cn = make_scaling(reg, n).c_n;
    return detail::tune(build, n, m, 1.0 + lambda / cn, opt.tolerance_factor / cn, opt, theta, lambda, reg);
}

inline degree_sequence_pair hypergraph_preset(std::int64_t n, std::int64_t k, degree_vec d) {
    require(k >= 2, "hyperedge size k must be at least 2");
    require(static_cast<std::int64_t>(d.size()) == n, "degree sequence length must equal n");
    std::int64_t s = 0;
    for (auto x : d) s += x;
    if (s % k != 0)
        throw precondition_error("degree sum " + std::to_string(s) + " not divisible by k=" + std::to_string(k));
    degree_vec r(static_cast<std::size_t>(s / k), k);
    return make_pair(std::move(d), std::move(r));
}

// ---------------------------------------------------------- text format

inline void write_degseq(std::ostream& os, const degree_sequence_pair& p) {
    os.precision(17);
    os << p.n() << ' ' << p.m() << ' ' << p.reg.token() << ' ' << p.theta_target << ' ' << p.lambda << '\n';
    for (auto d : p.d_l) os << d << '\n';
    for (auto d : p.d_r) os << d << '\n';
}

inline degree_sequence_pair read_degseq(std::istream& is) {
    std::int64_t n = 0, m = 0;
    std::string tok;
    double theta = 0, lambda = 0;
    if (!(is >> n >> m >> tok >> theta >> lambda) || n < 1 || m < 1)
        throw io_error("malformed degree sequence header");
    degree_sequence_pair p;
    p.reg = regime::parse(tok);
    p.theta_target = theta;
    p.lambda = lambda;
    p.d_l.resize(static_cast<std::size_t>(n));
    p.d_r.resize(static_cast<std::size_t>(m));
    for (auto& d : p.d_l)
        if (!(is >> d)) throw io_error("truncated degree sequence (l side)");
    for (auto& d : p.d_r)
        if (!(is >> d)) throw io_error("truncated degree sequence (r side)");
    try {
        validate(p);
    } catch (const precondition_error& e) {
        throw io_error(std::string("invalid degree sequence file: ") + e.what());
    }
    return p;
}

} // namespace bcmlab
