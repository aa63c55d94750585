#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "bcm.hpp"
#include "degseq.hpp"
#include "error.hpp"
#include "explore.hpp"
#include "levy.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace bcmlab {

// ---------------------------------------------------------- parallel driver

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots, so the outcome does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------- reference excursions

/// Default horizon: the parabola (rho/2) T^2 dominates 10 sqrt(kappa T).
inline double default_horizon(const levy_params& p) {
    if (p.kappa > 0 && p.rho > 0) return std::pow(20.0 * std::sqrt(p.kappa) / p.rho, 2.0 / 3.0);
    return 1.0;
}

/// True when the running minimum keeps decreasing over the second half.
inline bool drift_dominates(const grid_path& f) {
    if (f.size() < 3) return false;
    const auto half = (f.size() - 1) / 2;
    const double m_half = *std::min_element(f.values.begin(), f.values.begin() + static_cast<std::ptrdiff_t>(half) + 1);
    const double m_all = *std::min_element(f.values.begin(), f.values.end());
    return m_all < m_half;
}

struct horizon_calibration {
    double T = 0.0;
    double pilot_fraction = 0.0;
    bool converged = false;
};

/// Doubles T until at least `target` of the pilot paths show drift dominance.
inline horizon_calibration calibrate_horizon(const std::function<grid_path(double T, std::uint64_t seed)>& sample,
                                             double T0, std::size_t pilot, std::uint64_t seed, unsigned threads,
                                             double target = 0.99, int max_doublings = 12) {
    horizon_calibration out{T0, 0.0, false};
    for (int d = 0; d <= max_doublings; ++d) {
        std::vector<char> ok(pilot, 0);
        parallel_for(pilot, threads, [&](std::size_t i) { ok[i] = drift_dominates(sample(out.T, derive_seed(seed, i))); });
        out.pilot_fraction = static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(pilot);
        if (out.pilot_fraction >= target) {
            out.converged = true;
            return out;
        }
        out.T *= 2.0;
    }
    out.T /= 2.0;
    return out;
}

/// Reference parameters whose excursion lengths are the limiting r-sizes.
inline levy_params reference_params(const limit_constants& c) {
    if (c.reg.heavy()) return {0.0, 0.0, c.lambda * c.nu_inf_r / c.mu1_l, c.beta_merged, 0.0};
    return {c.kappa, c.rho, c.lambda * c.nu_inf_r, {}, 0.0};
}

// ---------------------------------------------------------- ensemble

struct ensemble_config {
    degree_sequence_pair pair;
    std::size_t replicas = 100;
    std::uint64_t seed = 1;
    std::size_t reference_replicas = 500;
    double dt = 1e-3;
    double T = 0.0;  // 0: calibrate from pilot paths
    std::size_t pilot_paths = 200;
    std::size_t top_k = 3;
    unsigned threads = 0;
    bool triangles = true;
    std::optional<levy_params> reference_override;
};

struct rescaled_component {
    double size_r = 0.0;
    double size_l = 0.0;
    double triangles = 0.0;  // rescaled triangle count (0 when not counted)
};

struct replica_stats {
    std::vector<rescaled_component> by_r;  // ordered by size_r
    std::vector<rescaled_component> by_l;  // ordered by size_l
    std::int64_t surplus = 0;
    std::int64_t component_count = 0;
    bool invariants_ok = true;
};

struct ks_row {
    std::size_t rank = 0;
    double r_by_r = 0.0;  // r-sizes under the size_r ordering vs zeta
    double l_by_r = 0.0;  // l-sizes under the size_r ordering vs nu_r zeta
    double r_by_l = 0.0;
    double l_by_l = 0.0;
};

struct ensemble_stats {
    limit_constants constants;
    scaling_regime scaling;
    levy_params reference;
    horizon_calibration horizon;
    std::vector<replica_stats> replicas;
    std::vector<std::vector<double>> reference_heads;  // per reference path, top_k excursion lengths
    std::vector<ks_row> ks;
    std::size_t invariant_failures = 0;
    double triangle_scale = 1.0;  // n^{-2/3} or a_n^{-3}
};

namespace detail {

inline replica_stats run_replica(const ensemble_config& cfg, const scaling_regime& sc, double tri_scale,
                                 double s, std::uint64_t seed) {
    const auto g = generate(cfg.pair, derive_seed(seed, 0));
    const auto tr = explore(g, s, derive_seed(seed, 1));
    const auto wc = components_from_walk(tr);
    const auto dec = decompose(g);

    replica_stats rs;
    rs.component_count = static_cast<std::int64_t>(dec.records.size());
    rs.surplus = tr.Cn.empty() ? 0 : tr.Cn.back();

    // walk components against the union-find oracle
    std::vector<std::pair<std::int64_t, std::int64_t>> a, b;
    std::int64_t sr = 0, sl = 0, surplus = 0;
    for (const auto& c : wc.discovery) a.emplace_back(c.size_r, c.size_l);
    for (const auto& c : dec.records) {
        b.emplace_back(c.size_r, c.size_l);
        sr += c.size_r;
        sl += c.size_l;
        surplus += c.surplus;
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    rs.invariants_ok = a == b && sr == g.m() && sl == g.n() && surplus == rs.surplus &&
                       !check_trace_identities(tr).has_value();

    std::optional<triangle_stats> tri;
    if (cfg.triangles) tri = count_triangles(project_rig(g), g, dec);

    const auto k = std::min(cfg.top_k, dec.records.size());
    auto row = [&](std::size_t idx) {
        const auto& c = dec.records[idx];
        return rescaled_component{static_cast<double>(c.size_r) / sc.b_n, static_cast<double>(c.size_l) / sc.b_n,
                                  tri ? static_cast<double>(tri->per_component[idx].total) * tri_scale : 0.0};
    };
    for (std::size_t i = 0; i < k; ++i) rs.by_r.push_back(row(i));
    std::vector<std::size_t> order(dec.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto x, auto y) { return dec.records[x].size_l > dec.records[y].size_l; });
    for (std::size_t i = 0; i < k; ++i) rs.by_l.push_back(row(order[i]));
    return rs;
}

inline std::vector<double> column(const std::vector<replica_stats>& rs, std::size_t rank, bool by_r, bool r_side) {
    std::vector<double> out;
    for (const auto& r : rs) {
        const auto& v = by_r ? r.by_r : r.by_l;
        out.push_back(rank < v.size() ? (r_side ? v[rank].size_r : v[rank].size_l) : 0.0);
    }
    return out;
}

} // namespace detail

inline double triangle_scale(const degree_sequence_pair& pair) {
    const auto sc = make_scaling(pair.reg, pair.n());
    return pair.reg.heavy() ? 1.0 / (sc.a_n * sc.a_n * sc.a_n) : 1.0 / sc.b_n;
}

inline ensemble_stats run_ensemble(const ensemble_config& cfg) {
    require(cfg.replicas >= 1, "replicas must be at least 1");
    require(cfg.top_k >= 1, "top_k must be at least 1");
    validate(cfg.pair);
    ensemble_stats out;
    out.scaling = make_scaling(cfg.pair.reg, cfg.pair.n());
    const bool need_constants = cfg.reference_replicas > 0 && !cfg.reference_override;
    try {
        out.constants = compute_limit_constants(cfg.pair, cfg.pair.lambda);
    } catch (const degeneracy_error&) {
        if (need_constants) throw;
        out.constants.reg = cfg.pair.reg;
    }
    out.triangle_scale = triangle_scale(cfg.pair);
    const double s = default_s(cfg.pair);

    out.replicas.resize(cfg.replicas);
    parallel_for(cfg.replicas, cfg.threads, [&](std::size_t i) {
        out.replicas[i] = detail::run_replica(cfg, out.scaling, out.triangle_scale, s, derive_seed(cfg.seed, i));
    });
    for (const auto& r : out.replicas) out.invariant_failures += !r.invariants_ok;

    if (cfg.reference_replicas == 0) return out;
    out.reference = cfg.reference_override ? *cfg.reference_override : reference_params(out.constants);
    const auto ref_seed = derive_seed(cfg.seed, 0x5eed0000ULL);
    auto sample = [&](double T, std::uint64_t sd) { return simulate(out.reference, cfg.dt, T, sd).path; };
    if (cfg.T > 0)
        out.horizon = {cfg.T, 1.0, true};
    else
        out.horizon = calibrate_horizon(sample, default_horizon(out.reference), cfg.pilot_paths,
                                        derive_seed(ref_seed, 1), cfg.threads);
    out.reference_heads.resize(cfg.reference_replicas);
    parallel_for(cfg.reference_replicas, cfg.threads, [&](std::size_t i) {
        auto lens = excursions(sample(out.horizon.T, derive_seed(derive_seed(ref_seed, 2), i)), cfg.top_k).lengths();
        lens.resize(cfg.top_k, 0.0);
        out.reference_heads[i] = std::move(lens);
    });

    const double nu_r = out.constants.nu_inf_r;
    for (std::size_t j = 0; j < cfg.top_k; ++j) {
        std::vector<double> zeta, zeta_l;
        for (const auto& h : out.reference_heads) {
            zeta.push_back(h[j]);
            zeta_l.push_back(nu_r * h[j]);
        }
        ks_row row{j + 1};
        row.r_by_r = ks_distance(detail::column(out.replicas, j, true, true), zeta);
        row.l_by_r = ks_distance(detail::column(out.replicas, j, true, false), zeta_l);
        row.r_by_l = ks_distance(detail::column(out.replicas, j, false, true), zeta);
        row.l_by_l = ks_distance(detail::column(out.replicas, j, false, false), zeta_l);
        out.ks.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------- susceptibility

struct susceptibility_report {
    double nu = 0.0;
    double estimate_r = 0.0, se_r = 0.0, bound_r = 0.0;
    double estimate_l = 0.0, se_l = 0.0, bound_l = 0.0;
    bool pass_r = false, pass_l = false;
    bool pass() const noexcept { return pass_r && pass_l; }
};

/// Expected component size seen from a uniform vertex, averaged over the
/// whole vertex set of each replica (sum of squared sizes over the count).
inline susceptibility_report susceptibility_check(const degree_sequence_pair& pair, std::size_t replicas,
                                                  std::uint64_t seed, unsigned threads = 0) {
    const auto ms = moments(pair);
    if (!(ms.nu < 1.0)) throw precondition_error("susceptibility bound needs a subcritical pair (nu < 1)");
    require(replicas >= 2, "need at least two replicas");
    std::vector<double> er(replicas), el(replicas);
    parallel_for(replicas, threads, [&](std::size_t i) {
        const auto g = generate(pair, derive_seed(seed, i));
        double qr = 0, ql = 0;
        for (const auto& c : components(g)) {
            qr += static_cast<double>(c.size_r) * static_cast<double>(c.size_r);
            ql += static_cast<double>(c.size_l) * static_cast<double>(c.size_l);
        }
        er[i] = qr / static_cast<double>(pair.m());
        el[i] = ql / static_cast<double>(pair.n());
    });
    susceptibility_report rep;
    rep.nu = ms.nu;
    const auto sr = summarize(er), sl = summarize(el);
    rep.estimate_r = sr.mean;
    rep.se_r = sr.std_error;
    rep.estimate_l = sl.mean;
    rep.se_l = sl.std_error;
    rep.bound_r = 1.0 + ms.nu_l * ms.mu_r[1] / (1.0 - ms.nu);
    rep.bound_l = 1.0 + ms.nu_r * ms.mu_l[1] / (1.0 - ms.nu);
    rep.pass_r = rep.estimate_r - 3.0 * rep.se_r <= rep.bound_r;
    rep.pass_l = rep.estimate_l - 3.0 * rep.se_l <= rep.bound_l;
    return rep;
}

// ---------------------------------------------------------- path counts

inline constexpr std::int64_t path_count_vertex_limit = 40;

struct path_counts {
    double ordered_l = 0;  // paths l-r-...-l with 2l edges, both directions counted
    double ordered_r = 0;
};

/// Simple alternating paths with 2*len edges, weighted by edge multiplicity.
inline path_counts count_paths(const bipartite_multigraph& g, std::int64_t len) {
    require(len >= 1, "path half-length must be at least 1");
    require(g.n() + g.m() <= path_count_vertex_limit, "graph too large for path enumeration (n + m > 40)");
    const auto n = g.n(), m = g.m();
    // vertex-level adjacency with multiplicities; r-vertices are shifted by n
    std::vector<std::map<std::int64_t, std::int64_t>> adj(static_cast<std::size_t>(n + m));
    for (std::int64_t e = 0; e < g.half_edges(); ++e) {
        const auto u = g.owner_l(e), w = n + g.owner_r(g.mate_of_l(e));
        ++adj[u][w];
        ++adj[w][u];
    }
    std::vector<char> used(static_cast<std::size_t>(n + m), 0);
    const std::int64_t edges = 2 * len;
    std::function<double(std::int64_t, std::int64_t)> walk = [&](std::int64_t v, std::int64_t depth) -> double {
        if (depth == edges) return 1.0;
        double total = 0;
        for (auto [x, mult] : adj[v]) {
            if (used[x]) continue;
            used[x] = 1;
            total += static_cast<double>(mult) * walk(x, depth + 1);
            used[x] = 0;
        }
        return total;
    };
    path_counts pc;
    for (std::int64_t v = 0; v < n + m; ++v) {
        used[v] = 1;
        (v < n ? pc.ordered_l : pc.ordered_r) += walk(v, 0);
        used[v] = 0;
    }
    return pc;
}

struct path_count_report {
    std::int64_t half_length = 1;
    double bound_l = 0, bound_r = 0;
    // unordered: each path counted once up to reversal
    double mean_l = 0, se_l = 0, mean_r = 0, se_r = 0;
    double mean_l_ordered = 0, mean_r_ordered = 0;
    bool pass = false;          // unordered convention
    bool pass_ordered = false;  // both directions counted
};

inline path_count_report path_count_check(const degree_sequence_pair& pair, std::int64_t len, std::size_t replicas,
                                          std::uint64_t seed, unsigned threads = 0) {
    require(pair.n() + pair.m() <= path_count_vertex_limit, "graph too large for path enumeration (n + m > 40)");
    require(replicas >= 2, "need at least two replicas");
    std::vector<double> pl(replicas), pr(replicas);
    parallel_for(replicas, threads, [&](std::size_t i) {
        const auto pc = count_paths(generate(pair, derive_seed(seed, i)), len);
        pl[i] = pc.ordered_l / 2.0;
        pr[i] = pc.ordered_r / 2.0;
    });
    const auto ms = moments(pair);
    path_count_report rep;
    rep.half_length = len;
    const double nu_pow = std::pow(ms.nu, static_cast<double>(len - 1));
    rep.bound_l = static_cast<double>(pair.n()) * ms.mu_l[1] * ms.nu_r * nu_pow;
    rep.bound_r = static_cast<double>(pair.m()) * ms.mu_r[1] * ms.nu_l * nu_pow;
    const auto sl = summarize(pl), sr = summarize(pr);
    rep.mean_l = sl.mean;
    rep.se_l = sl.std_error;
    rep.mean_r = sr.mean;
    rep.se_r = sr.std_error;
    rep.mean_l_ordered = 2 * sl.mean;
    rep.mean_r_ordered = 2 * sr.mean;
    const double tol = 1e-9;
    rep.pass = sl.mean - 3 * sl.std_error <= rep.bound_l * (1 + tol) + tol &&
               sr.mean - 3 * sr.std_error <= rep.bound_r * (1 + tol) + tol;
    rep.pass_ordered = 2 * (sl.mean - 3 * sl.std_error) <= rep.bound_l * (1 + tol) + tol &&
                       2 * (sr.mean - 3 * sr.std_error) <= rep.bound_r * (1 + tol) + tol;
    return rep;
}

// ---------------------------------------------------------- triangles

/// E[D C(D,3)] / E[D] over the r-degrees.
inline double triangle_factor(const degree_vec& d_r) {
    double num = 0, den = 0;
    for (auto d : d_r) {
        num += static_cast<double>(d) * static_cast<double>(choose3(d));
        den += static_cast<double>(d);
    }
    return num / den;
}

/// Poisson(mean) version of the same factor: E[C(X*, 3)] with X* - 1 ~ Poisson(mean).
inline double poisson_triangle_factor(double mean) { return (mean * mean * mean + 3 * mean * mean) / 6.0; }

struct heavy_triangle_paths {
    grid_path X;
    grid_path T;
};

/// The (X, T) pair whose Gamma-infinity marks give the limiting triangle counts.
inline heavy_triangle_paths heavy_triangle_sample(const limit_constants& c, double dt, double horizon,
                                                  std::uint64_t seed) {
    require(c.reg.heavy(), "heavy_triangle_sample needs heavy-tail constants");
    const auto steps = grid_steps(dt, horizon);
    auto rng = make_rng(seed);
    const double tau = c.reg.tau;
    const double th_rate = std::pow(c.theta, -(tau - 2.0) / (tau - 1.0));
    const double th_size = std::pow(c.theta, 1.0 / (tau - 1.0));
    const double th_tri = std::pow(c.theta, -3.0 / (tau - 1.0));

    std::vector<double> times, sizes, tri_times, tri_sizes;
    compensated_sum slope;
    slope += c.lambda;
    for (double b : c.beta_l) {
        if (b <= 0) continue;
        // V^{beta_l} run at speed nu_r / mu1_l
        times.push_back(exponential(rng, b) * c.mu1_l / c.nu_inf_r);
        sizes.push_back(b);
        slope += -b * b * c.nu_inf_r / c.mu1_l;
    }
    for (double b : c.beta_r) {
        if (b <= 0) continue;
        const double t = exponential(rng, b) * c.mu1_r / th_rate;
        times.push_back(t);
        sizes.push_back(c.nu_inf_l * th_size * b);
        slope += -c.nu_inf_l * th_size * th_rate * b * b / c.mu1_r;
        tri_times.push_back(t);
        tri_sizes.push_back(th_tri * b * b * b / 6.0);
    }
    return {jump_path(dt, steps, times, sizes, slope.value()), jump_path(dt, steps, tri_times, tri_sizes, 0.0)};
}

struct triangle_rank_row {
    std::size_t rank = 0;
    double empirical_mean = 0, empirical_se = 0;
    double predicted_mean = 0;  // factor * mean rescaled size_r (finite) or mean mark (heavy)
    double ratio = 0;
};

struct triangle_report {
    double factor = 0;  // finite-third proportionality constant
    std::vector<triangle_rank_row> rows;
    double hub_term = 0;  // heavy: theta^{-3/(tau-1)} (beta_1^r)^3 / 6
    horizon_calibration horizon;
};

inline triangle_report triangle_limit_check(const ensemble_config& cfg_in) {
    ensemble_config cfg = cfg_in;
    cfg.triangles = true;
    const bool heavy = cfg.pair.reg.heavy();
    if (heavy) cfg.reference_replicas = 0;
    const auto es = run_ensemble(cfg);
    triangle_report rep;
    if (!heavy) {
        rep.factor = triangle_factor(cfg.pair.d_r);
        for (std::size_t j = 0; j < cfg.top_k; ++j) {
            std::vector<double> t, s;
            for (const auto& r : es.replicas) {
                t.push_back(j < r.by_r.size() ? r.by_r[j].triangles : 0.0);
                s.push_back(j < r.by_r.size() ? r.by_r[j].size_r : 0.0);
            }
            const auto st = summarize(t);
            const double pred = rep.factor * summarize(s).mean;
            rep.rows.push_back({j + 1, st.mean, st.std_error, pred, pred > 0 ? st.mean / pred : 0.0});
        }
        return rep;
    }

    const auto c = compute_limit_constants(cfg.pair, cfg.pair.lambda);
    const double b1 = c.beta_r.empty() ? 0.0 : c.beta_r.front();
    rep.hub_term = std::pow(c.theta, -3.0 / (c.reg.tau - 1.0)) * b1 * b1 * b1 / 6.0;
    const auto ref_seed = derive_seed(cfg.seed, 0x7a1a0000ULL);
    auto sample = [&](double T, std::uint64_t sd) { return heavy_triangle_sample(c, cfg.dt, T, sd).X; };
    rep.horizon = cfg.T > 0 ? horizon_calibration{cfg.T, 1.0, true}
                            : calibrate_horizon(sample, 1.0, cfg.pilot_paths, derive_seed(ref_seed, 1), cfg.threads);
    const std::size_t refs = std::max<std::size_t>(cfg_in.reference_replicas, 1);
    std::vector<std::vector<double>> marks(refs);
    parallel_for(refs, cfg.threads, [&](std::size_t i) {
        const auto p = heavy_triangle_sample(c, cfg.dt, rep.horizon.T, derive_seed(derive_seed(ref_seed, 2), i));
        auto mk = gamma_infinity(p.X, p.T, cfg.top_k);
        mk.resize(cfg.top_k, 0.0);
        marks[i] = std::move(mk);
    });
    for (std::size_t j = 0; j < cfg.top_k; ++j) {
        std::vector<double> t, mk;
        for (const auto& r : es.replicas) t.push_back(j < r.by_r.size() ? r.by_r[j].triangles : 0.0);
        for (const auto& m : marks) mk.push_back(m[j]);
        const auto st = summarize(t);
        const double pred = summarize(mk).mean;
        rep.rows.push_back({j + 1, st.mean, st.std_error, pred, pred > 0 ? st.mean / pred : 0.0});
    }
    return rep;
}

} // namespace bcmlab
