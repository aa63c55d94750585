#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bcm.hpp"
#include "degseq.hpp"
#include "explore.hpp"
#include "levy.hpp"
#include "mc.hpp"
#include "sizebias.hpp"
#include "stats.hpp"

namespace bcmlab {

namespace fixtures {

/// Random pair with n, m in [1, max_side] and degrees in [1, max_degree],
/// repaired to equal sums without leaving the degree range.
inline degree_sequence_pair random_small_pair(std::uint64_t seed, std::int64_t max_side = 50,
                                              std::int64_t max_degree = 5) {
    auto rng = make_rng(seed, 77);
    for (;;) {
        const auto n = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(max_side)));
        const auto m = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(max_side)));
        degree_vec l(static_cast<std::size_t>(n)), r(static_cast<std::size_t>(m));
        for (auto& d : l) d = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(max_degree)));
        for (auto& d : r) d = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(max_degree)));
        std::int64_t sl = 0, sr = 0;
        for (auto d : l) sl += d;
        for (auto d : r) sr += d;
        // random unit moves: lower the heavier side or raise the lighter one
        auto& hi = sl > sr ? l : r;
        auto& lo = sl > sr ? r : l;
        std::int64_t gap = sl > sr ? sl - sr : sr - sl;
        for (int tries = 0; gap > 0 && tries < 100000; ++tries) {
            const bool down = uniform_index(rng, 2) == 0;
            auto& side = down ? hi : lo;
            auto& d = side[uniform_index(rng, side.size())];
            if (down && d > 1) --d, --gap;
            if (!down && d < max_degree) ++d, --gap;
        }
        if (gap != 0) continue;
        return make_pair(std::move(l), std::move(r));
    }
}

/// Mixed Brownian, parabolic and jump parameters used by path checks.
inline levy_params mixed_levy_params() { return {1.0, 1.5, 0.3, {1.2, 0.7, 0.4}, 0.0}; }

/// Subcritical family with nu = 2/3, replicated `copies` times.
inline degree_sequence_pair four_vertex_family(std::int64_t copies) {
    degree_vec l, r;
    for (std::int64_t i = 0; i < copies; ++i) {
        l.insert(l.end(), {3, 1, 1, 1});
        r.insert(r.end(), {2, 2, 1, 1});
    }
    return make_pair(std::move(l), std::move(r));
}

} // namespace fixtures

struct check_result {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct validation_options {
    bool quick = false;
    unsigned threads = 0;
    std::uint64_t seed = 20240601;
};

inline constexpr int check_count = 11;

/// Checks run by `validate all --quick`: the fast fixture-scale subset.
inline std::vector<int> quick_checks() { return {1, 2, 3, 4, 5, 6, 7, 9}; }

namespace detail {

inline bool excursion_structure_ok(const grid_path& f) {
    const auto es = excursions(f, std::numeric_limits<std::size_t>::max());
    double total = es.time_at_minimum + es.open_tail;
    for (const auto& e : es.top) total += e.length;
    if (std::abs(total - f.horizon()) > 1e-9 * (1 + f.horizon())) return false;
    auto iv = es.top;
    std::sort(iv.begin(), iv.end(), [](const auto& a, const auto& b) { return a.l < b.l; });
    double run_min = f.values[0];
    std::size_t scanned = 0;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        if (i > 0 && iv[i - 1].r > iv[i].l) return false;
        for (; scanned <= iv[i].l; ++scanned) run_min = std::min(run_min, f.values[scanned]);
        if (f.values[iv[i].l] != run_min || f.values[iv[i].r] > run_min) return false;
        for (std::size_t k = iv[i].l + 1; k < iv[i].r; ++k)
            if (f.values[k] <= run_min) return false;
    }
    return true;
}

struct corpus_entry {
    bipartite_multigraph graph;
    exploration_trace trace;
};

inline corpus_entry corpus_item(std::uint64_t seed) {
    auto g = generate(fixtures::random_small_pair(seed), seed);
    auto tr = explore(g, seed);
    return {std::move(g), std::move(tr)};
}

inline std::size_t corpus_size(const validation_options& o) { return o.quick ? 100 : 1000; }

inline check_result oracle_equivalence(const validation_options& o) {
    std::size_t bad = 0, first_bad = 0;
    for (std::size_t s = 0; s < corpus_size(o); ++s) {
        const auto c = corpus_item(s);
        std::vector<std::pair<std::int64_t, std::int64_t>> walk, oracle;
        for (const auto& w : components_from_walk(c.trace).discovery) walk.emplace_back(w.size_r, w.size_l);
        for (const auto& r : decompose(c.graph).records) oracle.emplace_back(r.size_r, r.size_l);
        std::sort(walk.begin(), walk.end());
        std::sort(oracle.begin(), oracle.end());
        if (walk != oracle && bad++ == 0) first_bad = s;
    }
    std::ostringstream os;
    os << "seeds=" << corpus_size(o) << " mismatches=" << bad;
    if (bad) os << " first=" << first_bad;
    return {1, "exploration components equal union-find oracle", bad == 0, os.str()};
}

inline check_result walk_identities(const validation_options& o) {
    std::size_t bad = 0, steps = 0;
    for (std::size_t s = 0; s < corpus_size(o); ++s) {
        const auto c = corpus_item(s);
        steps += static_cast<std::size_t>(c.trace.steps());
        bad += check_trace_identities(c.trace).has_value();
    }
    std::ostringstream os;
    os << "traces=" << corpus_size(o) << " steps=" << steps << " failing_traces=" << bad;
    return {2, "walk identities hold at every step", bad == 0, os.str()};
}

inline check_result triangle_bound(const validation_options& o) {
    std::size_t bound_fail = 0, exact_fail = 0, rows = 0;
    for (std::size_t s = 0; s < corpus_size(o); ++s) {
        const auto c = corpus_item(s);
        for (const auto& row : triangle_prefix_rows(c.graph, c.trace)) {
            ++rows;
            bound_fail += std::abs(static_cast<double>(row.triangles - row.proxy)) > row.bound;
            exact_fail += row.cn == 0 && row.triangles != row.proxy;
        }
    }
    std::ostringstream os;
    os << "prefixes=" << rows << " bound_violations=" << bound_fail << " zero_surplus_mismatches=" << exact_fail;
    return {3, "triangle prefix bound", bound_fail == 0 && exact_fail == 0, os.str()};
}

inline check_result size_biased_law(const validation_options& o) {
    const weighted_sequence ws({3, 2, 1}, {0, 0, 0});
    const std::size_t runs = o.quick ? 100000 : 1000000;
    auto rng = make_rng(o.seed, 4);
    std::map<std::vector<std::size_t>, double> counts;
    for (std::size_t i = 0; i < runs; ++i) counts[order_by_clocks(draw_clocks(ws, rng))] += 1;
    std::vector<double> obs, exp;
    std::vector<std::size_t> pi{0, 1, 2};
    do {
        obs.push_back(counts[pi]);
        exp.push_back(static_cast<double>(runs) * permutation_probability(ws, pi));
    } while (std::next_permutation(pi.begin(), pi.end()));
    const double stat = chi_square_statistic(obs, exp), p = chi_square_pvalue(stat, 5);
    std::ostringstream os;
    os << "samples=" << runs << " chi2=" << stat << " p=" << p;
    return {4, "clock ordering matches size-biased law", p > 1e-3, os.str()};
}

inline check_result simulator_moments(const validation_options& o) {
    const std::size_t paths = o.quick ? 2000 : 10000;
    const double dt = 1e-3;
    auto endpoints = [&](const levy_params& p, std::uint64_t stream) {
        std::vector<double> w(paths);
        parallel_for(paths, o.threads, [&](std::size_t i) {
            w[i] = simulate(p, dt, 1.0, derive_seed(derive_seed(o.seed, stream), i)).path.values.back();
        });
        return w;
    };
    const auto wb = endpoints({1.0, 1.0, 0.0, {}, 0.0}, 5);
    const auto sb = summarize(wb);
    const double vse = variance_std_error(wb);
    const bool mean_ok = std::abs(sb.mean + 0.5) <= 4 * sb.std_error;
    const bool var_ok = std::abs(sb.variance - 1.0) <= 4 * vse;
    const auto sj = summarize(endpoints({0.0, 0.0, 0.0, {1.0}, 0.0}, 6));
    const double jump_mean = -std::exp(-1.0);
    const bool jump_ok = std::abs(sj.mean - jump_mean) <= 4 * sj.std_error;
    std::ostringstream os;
    os << "paths=" << paths << " brownian mean=" << sb.mean << " (se " << sb.std_error << ") var=" << sb.variance
       << " (se " << vse << ") jump mean=" << sj.mean << " (se " << sj.std_error << ", target " << jump_mean << ")";
    return {5, "limit simulator moments", mean_ok && var_ok && jump_ok, os.str()};
}

inline check_result scaling_coupling(const validation_options& o) {
    const std::size_t paths = o.quick ? 20 : 100, steps = 3000;
    const double dt = 1e-3;
    const auto p = fixtures::mixed_levy_params();
    double worst = 0;
    for (double a : {0.5, 2.0}) {
        const auto q = rescale_params(p, a);
        for (std::size_t i = 0; i < paths; ++i) {
            auto rng = make_rng(derive_seed(o.seed, 600 + i));
            auto z = draw_noise(p, steps, rng);
            const auto w1 = simulate(p, a * dt, steps, z);
            for (auto& t : z.clocks) t /= a;
            const auto w2 = simulate(q, dt, steps, z);
            double dev = 0, scale = 0;
            for (std::size_t k = 0; k <= steps; ++k) {
                dev = std::max(dev, std::abs(a * w1.path.values[k] - w2.path.values[k]));
                scale = std::max(scale, std::abs(w2.path.values[k]));
            }
            worst = std::max(worst, dev / (1 + scale));
        }
    }
    std::ostringstream os;
    os << "paths=" << paths << " per a in {0.5, 2}; worst relative deviation=" << worst;
    return {6, "scaling coupling", worst <= 1e-9, os.str()};
}

inline check_result excursion_extraction(const validation_options& o) {
    bool fixtures_ok = true;
    {
        const auto es = excursions({1.0, {0, 1, -1, 2, 1, -2}});
        fixtures_ok = fixtures_ok && es.top.size() == 2 && es.top[0].l == 2 && es.top[0].r == 5 &&
                      es.top[1].l == 0 && es.top[1].r == 2 && es.lengths() == std::vector<double>{3, 2};
    }
    fixtures_ok = fixtures_ok && excursions({1.0, {3, 2, 1, 0, -1}}).top.empty();
    {
        const auto es = excursions({1.0, {0, 1, 0}});
        fixtures_ok = fixtures_ok && es.top.size() == 1 && es.top[0].l == 0 && es.top[0].r == 2 &&
                      es.top[0].length == 2.0;
    }
    const std::size_t paths = o.quick ? 100 : 1000;
    std::vector<char> ok(paths, 0);
    parallel_for(paths, o.threads, [&](std::size_t i) {
        ok[i] = excursion_structure_ok(simulate(fixtures::mixed_levy_params(), 1e-3, 3.0, derive_seed(o.seed, 700 + i)).path);
    });
    const auto bad = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 0));
    std::ostringstream os;
    os << "fixtures=" << (fixtures_ok ? "exact" : "MISMATCH") << " random_paths=" << paths << " violations=" << bad;
    return {7, "excursion extraction", fixtures_ok && bad == 0, os.str()};
}

inline double rel_err(double x, double target) { return std::abs(x - target) / std::abs(target); }

inline check_result poisson_bridge(const validation_options& o) {
    const std::int64_t n = 100000;
    const auto pair = build_finite_third(n, 1.0, 0.0, truncated_poisson(1.0, default_poisson_cap(n)), o.seed);
    const auto c = compute_limit_constants(pair, 0.0);
    const double f = triangle_factor(pair.d_r);
    const bool ok = rel_err(c.kappa, 2.0) <= 0.05 && rel_err(c.rho, 2.0) <= 0.05 && rel_err(f, 2.0 / 3.0) <= 0.05;
    std::ostringstream os;
    os << "n=" << n << " nu=" << moments(pair).nu << " kappa=" << c.kappa << " (err " << rel_err(c.kappa, 2.0)
       << ") rho=" << c.rho << " (err " << rel_err(c.rho, 2.0) << ") triangle_factor=" << f << " (err "
       << rel_err(f, 2.0 / 3.0) << ")";
    return {8, "Poisson constants bridge", ok, os.str()};
}

inline check_result susceptibility(const validation_options& o) {
    const std::int64_t copies = o.quick ? 25 : 250;
    const std::size_t replicas = o.quick ? 100 : 1000;
    const auto pair = fixtures::four_vertex_family(copies);
    const auto rep = susceptibility_check(pair, replicas, derive_seed(o.seed, 9), o.threads);
    std::ostringstream os;
    os << "n=" << pair.n() << " nu=" << rep.nu << " replicas=" << replicas << " r: " << rep.estimate_r << " (se "
       << rep.se_r << ") <= " << rep.bound_r << " l: " << rep.estimate_l << " (se " << rep.se_l
       << ") <= " << rep.bound_l;
    return {9, "susceptibility bound", rep.pass(), os.str()};
}

inline check_result desk_convergence(const validation_options& o) {
    const std::vector<std::int64_t> ns{1000, 3162, 10000};
    std::vector<double> ks;
    std::ostringstream os;
    for (auto n : ns) {
        ensemble_config cfg;
        cfg.pair = build_finite_third(n, 1.0, 0.0, truncated_poisson(1.0, default_poisson_cap(n)), derive_seed(o.seed, 10));
        cfg.replicas = 500;
        cfg.reference_replicas = 500;
        cfg.dt = 1e-3;
        cfg.top_k = 1;
        cfg.triangles = false;
        cfg.threads = o.threads;
        cfg.seed = derive_seed(o.seed, 11);
        const auto es = run_ensemble(cfg);
        ks.push_back(es.ks.front().r_by_r);
        os << "n=" << n << " ks=" << ks.back() << " T=" << es.horizon.T << "; ";
    }
    const bool ok = ks[0] > ks[1] + 1e-12 && ks[1] > ks[2] + 1e-12;
    os << (ok ? "monotone decrease" : "not monotone");
    return {10, "top-1 KS distance decreases with n", ok, os.str()};
}

inline check_result heavy_triangles(const validation_options& o) {
    std::ostringstream os;
    bool ok = false;
    double prev_gap = 0;
    for (std::int64_t n : {1000, 10000}) {
        ensemble_config cfg;
        cfg.pair = build_heavy_tail(n, 1.0, 0.0, 3.5, 0);
        cfg.replicas = 300;
        cfg.reference_replicas = 300;
        cfg.dt = 1e-3;
        cfg.top_k = 1;
        cfg.threads = o.threads;
        cfg.seed = derive_seed(o.seed, 12);
        const auto rep = triangle_limit_check(cfg);
        const auto& row = rep.rows.front();
        const bool in_band = row.ratio >= 0.5 && row.ratio <= 2.0;
        const bool hub = rep.hub_term >= 0.5 * row.empirical_mean && rep.hub_term >= 0.5 * row.predicted_mean;
        const double gap = std::abs(std::log(row.ratio));
        os << "n=" << n << " empirical=" << row.empirical_mean << " limit=" << row.predicted_mean
           << " ratio=" << row.ratio << " hub=" << rep.hub_term << (hub ? " dominant" : " not dominant") << "; ";
        if (n == 10000) {
            ok = in_band && hub;
            os << "trend " << (gap <= prev_gap ? "closer" : "further") << " at larger n";
        }
        prev_gap = gap;
    }
    return {11, "heavy-tail triangle marks", ok, os.str()};
}

} // namespace detail

inline check_result run_check(int id, const validation_options& o) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    check_result r;
    try {
        switch (id) {
        case 1: r = detail::oracle_equivalence(o); break;
        case 2: r = detail::walk_identities(o); break;
        case 3: r = detail::triangle_bound(o); break;
        case 4: r = detail::size_biased_law(o); break;
        case 5: r = detail::simulator_moments(o); break;
        case 6: r = detail::scaling_coupling(o); break;
        case 7: r = detail::excursion_extraction(o); break;
        case 8: r = detail::poisson_bridge(o); break;
        case 9: r = detail::susceptibility(o); break;
        case 10: r = detail::desk_convergence(o); break;
        case 11: r = detail::heavy_triangles(o); break;
        default: throw precondition_error("unknown check " + std::to_string(id));
        }
    } catch (const precondition_error&) {
        throw;
    } catch (const std::exception& e) {
        r = {id, "check raised an error", false, e.what()};
    }
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    // runtime budgets, seconds
    static const std::map<int, double> budget{{1, 10}, {4, 5}, {5, 60}, {9, 60}, {10, 1800}};
    if (auto it = budget.find(id); it != budget.end() && r.seconds > it->second) {
        r.pass = false;
        r.detail += " runtime over budget";
    }
    return r;
}

inline std::string format_result(const check_result& r) {
    std::ostringstream os;
    os.precision(6);
    os << (r.pass ? "[PASS]" : "[FAIL]") << " criterion " << r.id << ": " << r.name << " | " << r.detail << " ("
       << r.seconds << " s)";
    return os.str();
}

} // namespace bcmlab
