#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "bcm.hpp"
#include "degseq.hpp"
#include "error.hpp"
#include "path.hpp"
#include "random.hpp"

namespace bcmlab {

/// Per-step record of the depth-first exploration. Vectors indexed by step
/// k = 1..m are stored at position k-1.
struct exploration_trace {
    std::int64_t n = 0, m = 0, half_edges = 0;
    double s = 0.0;

    std::vector<std::int64_t> d_r;     // degree of the r-vertex explored at step k
    std::vector<std::int64_t> r_order; // its vertex index
    std::vector<std::int64_t> c;       // cycles found at step k
    std::vector<std::int64_t> L;       // steps i < k that started with an empty stack
    std::vector<std::int64_t> V;       // l-vertices discovered by the end of step k
    std::vector<std::int64_t> Yr;
    std::vector<std::int64_t> YlV;
    std::vector<std::int64_t> Ztilde;
    std::vector<std::int64_t> Cn;
    std::vector<std::int64_t> active;  // stack size after step k
    std::vector<double> p;             // cycle-probability bound for step k

    std::vector<std::int64_t> l_order;   // l-vertices in discovery order
    std::vector<std::int64_t> d_l_order; // their degrees

    std::int64_t steps() const noexcept { return static_cast<std::int64_t>(d_r.size()); }
    double Z(std::size_t i) const { return static_cast<double>(Ztilde[i]) - s * static_cast<double>(L[i]); }
    double Zup(std::size_t i) const { return Z(i) + 2.0 * static_cast<double>(Cn[i]); }
};

/// Default perturbation weight: the l-side criticality factor of the pair,
/// or 1 when that factor vanishes (all l-degrees equal 1).
inline double default_s(const degree_sequence_pair& pair) {
    const double nu_l = moments(pair).nu_l;
    return nu_l > 0 ? nu_l : 1.0;
}

namespace detail {

enum class half_edge_state : unsigned char { unexplored, active, dead };

inline void fill_cycle_bounds(exploration_trace& tr) {
    // bound for step k uses the stack after step k-1 and the l-vertices found up to step k
    std::vector<std::int64_t> cum(tr.d_l_order.size() + 1, 0);
    for (std::size_t i = 0; i < tr.d_l_order.size(); ++i) cum[i + 1] = cum[i] + tr.d_l_order[i];
    tr.p.resize(static_cast<std::size_t>(tr.steps()));
    for (std::size_t k = 0; k < tr.p.size(); ++k) {
        const std::int64_t a_prev = k == 0 ? 0 : tr.active[k - 1];
        const std::int64_t v_prev = k == 0 ? 0 : tr.V[k - 1];
        const std::int64_t v_now = tr.V[k];
        const double num = static_cast<double>(a_prev + cum[v_now] - cum[v_prev]);
        const double den = static_cast<double>(tr.half_edges - cum[v_now]);
        tr.p[k] = den > 0 ? std::min(1.0, num / den) : 1.0;
    }
}

} // namespace detail

inline exploration_trace explore(const bipartite_multigraph& g, double s, std::uint64_t seed) {
    require(s > 0.0, "perturbation weight s must be positive");
    using detail::half_edge_state;
    const auto n = g.n(), m = g.m(), h = g.half_edges();
    for (std::int64_t e = 0; e < h; ++e)
        if (g.mate_of_r(g.mate_of_l(e)) != e) throw structural_error("matching is not a bijection");

    exploration_trace tr;
    tr.n = n;
    tr.m = m;
    tr.half_edges = h;
    tr.s = s;
    for (auto* v : {&tr.d_r, &tr.r_order, &tr.c, &tr.L, &tr.V, &tr.Yr, &tr.YlV, &tr.Ztilde, &tr.Cn, &tr.active})
        v->reserve(static_cast<std::size_t>(m));

    std::vector<half_edge_state> state(static_cast<std::size_t>(h), half_edge_state::unexplored);
    std::vector<char> l_found(static_cast<std::size_t>(n), 0), r_done(static_cast<std::size_t>(m), 0);
    std::vector<std::int64_t> stack;  // l-half-edges, top at back; stale entries skipped lazily
    std::int64_t active = 0;

    std::vector<std::int64_t> restart(static_cast<std::size_t>(h));
    std::iota(restart.begin(), restart.end(), std::int64_t{0});
    auto rng = make_rng(seed);
    shuffle(restart, rng);
    std::size_t restart_pos = 0;

    std::int64_t L = 0, V = 0, Yr = 0, Yl = 0, C = 0;
    std::vector<std::int64_t> fresh;

    for (std::int64_t k = 1; k <= m; ++k) {
        std::int64_t w = -1, entry = -1;
        if (active == 0) {
            ++L;
            while (r_done[g.owner_r(restart[restart_pos])]) ++restart_pos;
            w = g.owner_r(restart[restart_pos]);
        } else {
            while (state[stack.back()] != half_edge_state::active) stack.pop_back();
            const auto e = stack.back();
            stack.pop_back();
            state[e] = half_edge_state::dead;
            --active;
            entry = g.mate_of_l(e);
            w = g.owner_r(entry);
            if (r_done[w]) throw structural_error("active half-edge leads to an explored r-vertex");
        }
        r_done[w] = 1;

        std::int64_t cycles = 0;
        fresh.clear();
        for (std::int64_t f = g.first_r(w); f < g.first_r(w) + g.degree_r(w); ++f) {
            if (f == entry) continue;
            const auto e = g.mate_of_r(f);
            const auto v = g.owner_l(e);
            if (l_found[v]) {
                if (state[e] != half_edge_state::active) throw structural_error("half-edge of a found l-vertex not active");
                state[e] = half_edge_state::dead;
                --active;
                ++cycles;
                continue;
            }
            l_found[v] = 1;
            ++V;
            Yl += g.degree_l(v) - 1;
            tr.l_order.push_back(v);
            tr.d_l_order.push_back(g.degree_l(v));
            state[e] = half_edge_state::dead;
            for (std::int64_t x = g.first_l(v); x < g.first_l(v) + g.degree_l(v); ++x) {
                if (x == e) continue;
                state[x] = half_edge_state::active;
                ++active;
                fresh.push_back(x);
            }
        }
        // smallest (vertex, half-edge) on top; half-edge indices are grouped by vertex
        std::sort(fresh.begin(), fresh.end(), std::greater<>{});
        for (auto x : fresh)
            if (state[x] == half_edge_state::active) stack.push_back(x);

        C += cycles;
        Yr += g.degree_r(w) - 1;
        tr.d_r.push_back(g.degree_r(w));
        tr.r_order.push_back(w);
        tr.c.push_back(cycles);
        tr.L.push_back(L);
        tr.V.push_back(V);
        tr.Yr.push_back(Yr);
        tr.YlV.push_back(Yl);
        tr.Ztilde.push_back(Yl - C - k);
        tr.Cn.push_back(C);
        tr.active.push_back(active);
    }
    detail::fill_cycle_bounds(tr);
    return tr;
}

inline exploration_trace explore(const bipartite_multigraph& g, std::uint64_t seed) {
    return explore(g, default_s(g.pair()), seed);
}

/// Checks the walk identities and the reflection identity at every step;
/// returns the first violated step (1-based) or nullopt.
inline std::optional<std::int64_t> check_trace_identities(const exploration_trace& tr) {
    double running_min = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(tr.steps()); ++i) {
        const auto k = static_cast<std::int64_t>(i) + 1;
        const bool ok_z = tr.Ztilde[i] == tr.YlV[i] - tr.Cn[i] - k;
        const bool ok_v = tr.V[i] == tr.Yr[i] + tr.L[i] - tr.Cn[i];
        const std::int64_t dl = i == 0 ? tr.L[0] : tr.L[i] - tr.L[i - 1];
        const bool ok_l = (i == 0 ? tr.L[0] == 1 : dl == 0 || dl == 1);
        const bool ok_c = i == 0 || tr.Cn[i] >= tr.Cn[i - 1];
        // stack size equals Z + (1+s) L, and the running minimum of Z never
        // dips below the pre-jump floor -(1+s) L of the current component
        const bool ok_a = tr.active[i] == tr.Ztilde[i] + tr.L[i] && tr.active[i] >= 0;
        running_min = std::min(running_min, tr.Z(i));
        const double floor = -(1.0 + tr.s) * static_cast<double>(tr.L[i]);
        const bool ok_m = running_min >= floor - 1e-9 * (1.0 + std::abs(floor));
        if (!(ok_z && ok_v && ok_l && ok_c && ok_a && ok_m)) return k;
    }
    return std::nullopt;
}

// ---------------------------------------------------------- components

struct walk_component {
    std::int64_t tau_prev = 0;
    std::int64_t tau = 0;
    std::int64_t size_r = 0;
    std::int64_t size_l = 0;
};

struct walk_components {
    std::vector<walk_component> discovery;  // in discovery order
    std::vector<walk_component> ordered;    // size_r desc, ties by discovery
};

inline walk_components components_from_walk(const exploration_trace& tr) {
    walk_components out;
    std::int64_t prev = 0, v_prev = 0, level = 1;
    for (std::size_t i = 0; i < static_cast<std::size_t>(tr.steps()); ++i) {
        // Z hits -(1+s) j exactly when the stack empties during component j
        if (tr.L[i] == level && tr.Ztilde[i] == -level) {
            const auto k = static_cast<std::int64_t>(i) + 1;
            out.discovery.push_back({prev, k, k - prev, tr.V[i] - v_prev});
            prev = k;
            v_prev = tr.V[i];
            ++level;
        }
    }
    if (prev != tr.m || v_prev != tr.n) throw structural_error("walk does not return to its final level");
    out.ordered = out.discovery;
    std::stable_sort(out.ordered.begin(), out.ordered.end(),
                     [](const auto& a, const auto& b) { return a.size_r > b.size_r; });
    return out;
}

// ---------------------------------------------------------- rescaling

/// a_n^{-1} Z(floor(b_n t)) on t_i = i dt, i = 0..points-1; held at Z(m) past the end.
inline grid_path rescaled_walk(const exploration_trace& tr, const scaling_regime& sc, double dt,
                               std::size_t points) {
    require(dt > 0 && points >= 1, "rescaled_walk needs dt > 0 and at least one point");
    grid_path p{dt, std::vector<double>(points)};
    for (std::size_t i = 0; i < points; ++i) {
        const auto k = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(sc.b_n * p.time(i) + 1e-9)), tr.m);
        p.values[i] = k == 0 ? 0.0 : tr.Z(static_cast<std::size_t>(k - 1)) / sc.a_n;
    }
    return p;
}

// ---------------------------------------------------------- residual criticality

/// Side factors (nu_l, nu_r) of the unexplored part after `steps` exploration steps.
inline std::pair<double, double> residual_factors(const exploration_trace& tr, const degree_sequence_pair& pair,
                                                  std::int64_t steps) {
    require(steps >= 0 && steps <= tr.m, "step count outside [0, m]");
    require(pair.n() == tr.n && pair.m() == tr.m, "trace and degree pair disagree");
    const auto nl = steps == 0 ? 0 : tr.V[steps - 1];
    if (steps == tr.m || nl == tr.n) throw precondition_error("residual criticality undefined: a side is fully explored");
    auto side = [](const degree_vec& d, const std::vector<std::int64_t>& explored, std::int64_t count) {
        std::int64_t s1 = 0, s2 = 0;
        for (auto x : d) s1 += x, s2 += x * (x - 1);
        for (std::int64_t i = 0; i < count; ++i) {
            const auto x = d[explored[i]];
            s1 -= x;
            s2 -= x * (x - 1);
        }
        return static_cast<double>(s2) / static_cast<double>(s1);
    };
    return {side(pair.d_l, tr.l_order, nl), side(pair.d_r, tr.r_order, steps)};
}

/// Criticality of the unexplored part after `steps` exploration steps.
inline double residual_criticality(const exploration_trace& tr, const degree_sequence_pair& pair,
                                   std::int64_t steps) {
    const auto [fl, fr] = residual_factors(tr, pair, steps);
    return fl * fr;
}

inline double residual_criticality(const exploration_trace& tr, const degree_sequence_pair& pair,
                                   const scaling_regime& sc, double t) {
    require(t >= 0 && sc.b_n * t <= static_cast<double>(tr.m) + 1e-9, "t outside [0, m/b_n]");
    return residual_criticality(tr, pair, static_cast<std::int64_t>(std::floor(sc.b_n * t + 1e-9)));
}

// ---------------------------------------------------------- triangle prefix bound

struct triangle_prefix_row {
    std::int64_t t = 0;
    std::int64_t triangles = 0;
    std::int64_t proxy = 0;
    std::int64_t cn = 0;
    double bound = 0.0;
};

/// Triangles of the intersection graph spanned by the first t explored
/// r-vertices, against the sum of C(d_r, 3) and the surplus-cubed bound.
inline std::vector<triangle_prefix_row> triangle_prefix_rows(const bipartite_multigraph& g,
                                                             const exploration_trace& tr) {
    const double d1 = static_cast<double>(g.pair().d_r.front());
    prefix_triangle_counter counter(g);
    std::vector<triangle_prefix_row> rows;
    rows.reserve(static_cast<std::size_t>(tr.steps()));
    std::int64_t proxy = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(tr.steps()); ++i) {
        proxy += choose3(tr.d_r[i]);
        const auto c = static_cast<double>(tr.Cn[i]);
        rows.push_back({static_cast<std::int64_t>(i) + 1, counter.add_r_vertex(tr.r_order[i]), proxy, tr.Cn[i],
                        19.0 / 6.0 * d1 * d1 * c * c * c});
    }
    return rows;
}

// ---------------------------------------------------------- CSV export

inline void write_trace_csv(std::ostream& os, const exploration_trace& tr) {
    os << "k,d_r,c,L,V,Yr,YlV,Ztilde,Cn\n";
    for (std::size_t i = 0; i < static_cast<std::size_t>(tr.steps()); ++i)
        os << i + 1 << ',' << tr.d_r[i] << ',' << tr.c[i] << ',' << tr.L[i] << ',' << tr.V[i] << ',' << tr.Yr[i]
           << ',' << tr.YlV[i] << ',' << tr.Ztilde[i] << ',' << tr.Cn[i] << '\n';
}

} // namespace bcmlab
