#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "degseq.hpp"
#include "error.hpp"
#include "numeric.hpp"
#include "random.hpp"

namespace bcmlab {

/// Half-edge matching between l and r sides. Half-edges of vertex v occupy
/// the index range [off[v], off[v+1]).
class bipartite_multigraph {
public:
    bipartite_multigraph() = default;

    bipartite_multigraph(degree_sequence_pair pair, std::vector<std::int64_t> match)
        : pair_(std::move(pair)), match_(std::move(match)) {
        validate(pair_);
        build_offsets(pair_.d_l, off_l_, owner_l_);
        build_offsets(pair_.d_r, off_r_, owner_r_);
        const auto h = static_cast<std::size_t>(pair_.half_edges());
        if (match_.size() != h) throw structural_error("matching length differs from half-edge count");
        inv_.assign(h, -1);
        for (std::size_t e = 0; e < h; ++e) {
            const auto f = match_[e];
            if (f < 0 || static_cast<std::size_t>(f) >= h || inv_[f] != -1)
                throw structural_error("matching is not a bijection");
            inv_[f] = static_cast<std::int64_t>(e);
        }
    }

    const degree_sequence_pair& pair() const noexcept { return pair_; }
    std::int64_t n() const noexcept { return pair_.n(); }
    std::int64_t m() const noexcept { return pair_.m(); }
    std::int64_t half_edges() const noexcept { return static_cast<std::int64_t>(match_.size()); }

    /// r-half-edge matched to l-half-edge e, and the inverse.
    std::int64_t mate_of_l(std::int64_t e) const { return match_[e]; }
    std::int64_t mate_of_r(std::int64_t f) const { return inv_[f]; }
    std::int64_t owner_l(std::int64_t e) const { return owner_l_[e]; }
    std::int64_t owner_r(std::int64_t f) const { return owner_r_[f]; }
    std::int64_t first_l(std::int64_t v) const { return off_l_[v]; }
    std::int64_t first_r(std::int64_t w) const { return off_r_[w]; }
    std::int64_t degree_l(std::int64_t v) const { return pair_.d_l[v]; }
    std::int64_t degree_r(std::int64_t w) const { return pair_.d_r[w]; }
    const std::vector<std::int64_t>& matching() const noexcept { return match_; }

private:
    static void build_offsets(const degree_vec& d, std::vector<std::int64_t>& off,
                              std::vector<std::int64_t>& owner) {
        off.assign(d.size() + 1, 0);
        for (std::size_t v = 0; v < d.size(); ++v) off[v + 1] = off[v] + d[v];
        owner.resize(static_cast<std::size_t>(off.back()));
        for (std::size_t v = 0; v < d.size(); ++v)
            std::fill(owner.begin() + off[v], owner.begin() + off[v + 1], static_cast<std::int64_t>(v));
    }

    degree_sequence_pair pair_;
    std::vector<std::int64_t> match_, inv_;
    std::vector<std::int64_t> off_l_, off_r_, owner_l_, owner_r_;
};

inline bipartite_multigraph generate(const degree_sequence_pair& pair, std::uint64_t seed) {
    validate(pair);
    std::vector<std::int64_t> match(static_cast<std::size_t>(pair.half_edges()));
    std::iota(match.begin(), match.end(), std::int64_t{0});
    auto rng = make_rng(seed);
    shuffle(match, rng);
    return bipartite_multigraph(pair, std::move(match));
}

// ---------------------------------------------------------- components

struct component_record {
    std::int64_t id = 0;
    std::int64_t size_r = 0;
    std::int64_t size_l = 0;
    std::int64_t edge_count = 0;
    std::int64_t surplus = 0;
    std::int64_t min_l = 0;  // smallest l-vertex index, used for tie-breaking
};

struct component_decomposition {
    std::vector<component_record> records;  // sorted: size_r desc, then min_l asc
    std::vector<std::int64_t> comp_of_l;    // index into records
    std::vector<std::int64_t> comp_of_r;
};

namespace detail {

class union_find {
public:
    explicit union_find(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::size_t> parent_, size_;
};

} // namespace detail

inline component_decomposition decompose(const bipartite_multigraph& g) {
    const auto n = static_cast<std::size_t>(g.n()), m = static_cast<std::size_t>(g.m());
    detail::union_find uf(n + m);
    for (std::int64_t e = 0; e < g.half_edges(); ++e)
        uf.unite(static_cast<std::size_t>(g.owner_l(e)), n + static_cast<std::size_t>(g.owner_r(g.mate_of_l(e))));

    std::vector<std::int64_t> root_slot(n + m, -1);
    std::vector<component_record> recs;
    auto slot = [&](std::size_t v) {
        const auto r = uf.find(v);
        if (root_slot[r] < 0) {
            root_slot[r] = static_cast<std::int64_t>(recs.size());
            recs.push_back({});
            recs.back().min_l = std::numeric_limits<std::int64_t>::max();
        }
        return root_slot[r];
    };
    std::vector<std::int64_t> raw_l(n), raw_r(m);
    for (std::size_t v = 0; v < n; ++v) {
        auto& c = recs[raw_l[v] = slot(v)];
        ++c.size_l;
        c.edge_count += g.degree_l(static_cast<std::int64_t>(v));
        c.min_l = std::min(c.min_l, static_cast<std::int64_t>(v));
    }
    for (std::size_t w = 0; w < m; ++w) ++recs[raw_r[w] = slot(n + w)].size_r;

    std::vector<std::int64_t> order(recs.size());
    std::iota(order.begin(), order.end(), std::int64_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (recs[a].size_r != recs[b].size_r) return recs[a].size_r > recs[b].size_r;
        return recs[a].min_l < recs[b].min_l;
    });
    std::vector<std::int64_t> rank(recs.size());
    component_decomposition out;
    out.records.reserve(recs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        rank[order[i]] = static_cast<std::int64_t>(i);
        auto c = recs[order[i]];
        c.id = static_cast<std::int64_t>(i);
        c.surplus = c.edge_count - (c.size_r + c.size_l - 1);
        out.records.push_back(c);
    }
    out.comp_of_l.resize(n);
    out.comp_of_r.resize(m);
    for (std::size_t v = 0; v < n; ++v) out.comp_of_l[v] = rank[raw_l[v]];
    for (std::size_t w = 0; w < m; ++w) out.comp_of_r[w] = rank[raw_r[w]];
    return out;
}

inline std::vector<component_record> components(const bipartite_multigraph& g) {
    return decompose(g).records;
}

// ---------------------------------------------------------- intersection graph

struct intersection_graph {
    std::int64_t n = 0;
    std::vector<std::vector<std::int64_t>> adj;          // sorted, per l-vertex
    std::vector<std::vector<std::int64_t>> r_neighbors;  // sorted distinct l-neighbors per r-vertex
    std::vector<std::vector<std::int64_t>> l_neighbors;  // sorted distinct r-neighbors per l-vertex
    std::int64_t edge_count = 0;

    bool has_edge(std::int64_t u, std::int64_t v) const {
        return std::binary_search(adj[u].begin(), adj[u].end(), v);
    }
};

inline std::vector<std::int64_t> distinct_l_neighbors(const bipartite_multigraph& g, std::int64_t w) {
    std::vector<std::int64_t> nb;
    nb.reserve(static_cast<std::size_t>(g.degree_r(w)));
    for (std::int64_t f = g.first_r(w); f < g.first_r(w) + g.degree_r(w); ++f)
        nb.push_back(g.owner_l(g.mate_of_r(f)));
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    return nb;
}

inline intersection_graph project_rig(const bipartite_multigraph& g) {
    intersection_graph rig;
    rig.n = g.n();
    rig.adj.resize(static_cast<std::size_t>(g.n()));
    rig.l_neighbors.resize(static_cast<std::size_t>(g.n()));
    rig.r_neighbors.resize(static_cast<std::size_t>(g.m()));
    for (std::int64_t w = 0; w < g.m(); ++w) {
        auto nb = distinct_l_neighbors(g, w);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            rig.l_neighbors[nb[i]].push_back(w);
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                rig.adj[nb[i]].push_back(nb[j]);
                rig.adj[nb[j]].push_back(nb[i]);
            }
        }
        rig.r_neighbors[w] = std::move(nb);
    }
    for (auto& a : rig.adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
        rig.edge_count += static_cast<std::int64_t>(a.size());
    }
    rig.edge_count /= 2;
    return rig;
}

// ---------------------------------------------------------- triangles

struct component_triangles {
    std::int64_t total = 0;
    std::int64_t type_one = 0;
    std::int64_t type_two = 0;
    std::int64_t proxy = 0;  // sum of C(d_r, 3) over the component's r-vertices
};

struct triangle_stats {
    std::vector<component_triangles> per_component;  // aligned with the component records
    component_triangles totals;
};

namespace detail {

inline bool shares_r_vertex(const intersection_graph& rig, std::int64_t u, std::int64_t v, std::int64_t w) {
    for (auto r : rig.l_neighbors[u]) {
        const auto& nb = rig.r_neighbors[r];
        if (std::binary_search(nb.begin(), nb.end(), v) && std::binary_search(nb.begin(), nb.end(), w))
            return true;
    }
    return false;
}

} // namespace detail

inline triangle_stats count_triangles(const intersection_graph& rig, const bipartite_multigraph& g,
                                      const component_decomposition& comps) {
    triangle_stats st;
    st.per_component.resize(comps.records.size());
    for (std::int64_t w = 0; w < g.m(); ++w)
        st.per_component[comps.comp_of_r[w]].proxy += choose3(g.degree_r(w));

    // each triangle u < v < x is found once, from its smallest edge (u, v)
    std::vector<std::int64_t> common;
    for (std::int64_t u = 0; u < rig.n; ++u) {
        const auto& au = rig.adj[u];
        for (auto v : au) {
            if (v <= u) continue;
            const auto& av = rig.adj[v];
            common.clear();
            std::set_intersection(std::upper_bound(au.begin(), au.end(), v), au.end(),
                                  std::upper_bound(av.begin(), av.end(), v), av.end(),
                                  std::back_inserter(common));
            for (auto x : common) {
                auto& c = st.per_component[comps.comp_of_l[u]];
                ++c.total;
                if (detail::shares_r_vertex(rig, u, v, x))
                    ++c.type_one;
                else
                    ++c.type_two;
            }
        }
    }
    for (const auto& c : st.per_component) {
        st.totals.total += c.total;
        st.totals.type_one += c.type_one;
        st.totals.type_two += c.type_two;
        st.totals.proxy += c.proxy;
    }
    return st;
}

/// Triangle count of the intersection graph induced by a growing set of
/// r-vertices: add_r_vertex inserts all pairs among its distinct neighbours.
class prefix_triangle_counter {
public:
    explicit prefix_triangle_counter(const bipartite_multigraph& g)
        : g_(&g), adj_(static_cast<std::size_t>(g.n())) {}

    std::int64_t add_r_vertex(std::int64_t w) {
        const auto nb = distinct_l_neighbors(*g_, w);
        for (std::size_t i = 0; i < nb.size(); ++i)
            for (std::size_t j = i + 1; j < nb.size(); ++j) add_edge(nb[i], nb[j]);
        return triangles_;
    }
    std::int64_t triangles() const noexcept { return triangles_; }

private:
    void add_edge(std::int64_t u, std::int64_t v) {
        auto& au = adj_[u];
        if (au.contains(v)) return;
        auto& av = adj_[v];
        const auto& small = au.size() < av.size() ? au : av;
        const auto& big = au.size() < av.size() ? av : au;
        for (auto x : small) triangles_ += big.contains(x);
        au.insert(v);
        av.insert(u);
    }

    const bipartite_multigraph* g_;
    std::vector<std::unordered_set<std::int64_t>> adj_;
    std::int64_t triangles_ = 0;
};

// ---------------------------------------------------------- edge list format

/// Edge list in l-half-edge order; the k-th occurrence of an r-vertex uses
/// its k-th half-edge, so writing then reading reproduces the matching.
inline void write_edge_list(std::ostream& os, const bipartite_multigraph& g) {
    os << "# " << g.n() << ' ' << g.m() << '\n';
    for (std::int64_t e = 0; e < g.half_edges(); ++e)
        os << g.owner_l(e) << ' ' << g.owner_r(g.mate_of_l(e)) << '\n';
}

inline bipartite_multigraph read_edge_list(std::istream& is) {
    std::int64_t n = -1, m = -1;
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    std::string line;
    while (std::getline(is, line)) {
        const auto p = line.find_first_not_of(" \t\r");
        if (p == std::string::npos) continue;
        std::istringstream ls(line.substr(p));
        if (line[p] == '#') {
            char hash;
            std::int64_t a, b;
            if (n < 0 && (ls >> hash >> a >> b)) n = a, m = b;
            continue;
        }
        std::int64_t u, w;
        if (!(ls >> u >> w) || u < 0 || w < 0) throw io_error("malformed edge line: " + line);
        edges.emplace_back(u, w);
    }
    for (auto [u, w] : edges) {
        n = std::max(n, u + 1);
        m = std::max(m, w + 1);
    }
    if (n < 1 || m < 1 || edges.empty()) throw io_error("empty edge list");
    degree_vec dl(static_cast<std::size_t>(n), 0), dr(static_cast<std::size_t>(m), 0);
    for (auto [u, w] : edges) ++dl[u], ++dr[w];
    degree_sequence_pair pair{dl, dr, static_cast<double>(m) / static_cast<double>(n), 0.0, {}};
    try {
        validate(pair);
    } catch (const precondition_error& e) {
        throw io_error(std::string("edge list does not describe a valid degree pair: ") + e.what());
    }
    std::vector<std::int64_t> off_r(static_cast<std::size_t>(m) + 1, 0), used(static_cast<std::size_t>(m), 0);
    for (std::int64_t w = 0; w < m; ++w) off_r[w + 1] = off_r[w] + dr[w];
    // l-half-edges must appear grouped by owner in increasing order
    std::vector<std::int64_t> match;
    match.reserve(edges.size());
    std::int64_t prev = 0;
    for (auto [u, w] : edges) {
        if (u < prev) throw io_error("edge list must be sorted by l-vertex");
        prev = u;
        match.push_back(off_r[w] + used[w]++);
    }
    return bipartite_multigraph(std::move(pair), std::move(match));
}

} // namespace bcmlab
