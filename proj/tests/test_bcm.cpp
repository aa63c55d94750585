#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <bcmlab/bcm.hpp>
#include <bcmlab/explore.hpp>

#include "support.hpp"

using namespace bcmlab;

namespace {

// Vertex-level bipartite adjacency sets built straight from the matching.
std::vector<std::set<std::int64_t>> r_sets(const bipartite_multigraph& g) {
    std::vector<std::set<std::int64_t>> nb(static_cast<std::size_t>(g.m()));
    for (std::int64_t e = 0; e < g.half_edges(); ++e) nb[g.owner_r(g.mate_of_l(e))].insert(g.owner_l(e));
    return nb;
}

struct brute_triangles {
    std::int64_t total = 0, type_one = 0;
};

// O(n^3 m) enumeration over l-vertex triples.
brute_triangles brute_force(const bipartite_multigraph& g) {
    const auto nb = r_sets(g);
    auto linked = [&](std::int64_t a, std::int64_t b) {
        for (const auto& s : nb)
            if (s.count(a) && s.count(b)) return true;
        return false;
    };
    brute_triangles out;
    for (std::int64_t u = 0; u < g.n(); ++u)
        for (std::int64_t v = u + 1; v < g.n(); ++v) {
            if (!linked(u, v)) continue;
            for (std::int64_t x = v + 1; x < g.n(); ++x) {
                if (!linked(u, x) || !linked(v, x)) continue;
                ++out.total;
                for (const auto& s : nb)
                    if (s.count(u) && s.count(v) && s.count(x)) {
                        ++out.type_one;
                        break;
                    }
            }
        }
    return out;
}

// Multigraph from an explicit list of (l, r) edges in l-half-edge order.
bipartite_multigraph from_edges(const std::vector<std::pair<int, int>>& edges) {
    std::ostringstream os;
    for (auto [u, w] : edges) os << u << ' ' << w << '\n';
    std::istringstream is(os.str());
    return read_edge_list(is);
}

} // namespace

TEST(Generate, ForcedStar) {
    const auto g = generate(make_pair({1, 1}, {2}), 4);
    EXPECT_EQ(g.owner_r(g.mate_of_l(0)), 0);
    EXPECT_EQ(g.owner_r(g.mate_of_l(1)), 0);
    const auto cs = components(g);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].size_r, 1);
    EXPECT_EQ(cs[0].size_l, 2);
    EXPECT_EQ(cs[0].surplus, 0);
}

TEST(Generate, ForcedDoubleEdge) {
    const auto g = generate(make_pair({2}, {2}), 9);
    const auto cs = components(g);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].edge_count, 2);
    EXPECT_EQ(cs[0].surplus, 1);
}

TEST(Generate, PerfectMatchingComponents) {
    const auto g = generate(make_pair(degree_vec(5, 1), degree_vec(5, 1)), 2);
    const auto cs = components(g);
    ASSERT_EQ(cs.size(), 5u);
    for (const auto& c : cs) {
        EXPECT_EQ(c.size_r, 1);
        EXPECT_EQ(c.size_l, 1);
        EXPECT_EQ(c.surplus, 0);
    }
    EXPECT_EQ(project_rig(g).edge_count, 0);
}

TEST(Generate, DegreesPreservedAndDeterministic) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto p = fixtures::random_small_pair(s);
        const auto g = generate(p, s);
        degree_vec dl(p.d_l.size(), 0), dr(p.d_r.size(), 0);
        for (std::int64_t e = 0; e < g.half_edges(); ++e) {
            ++dl[g.owner_l(e)];
            ++dr[g.owner_r(g.mate_of_l(e))];
        }
        EXPECT_EQ(dl, p.d_l);
        EXPECT_EQ(dr, p.d_r);
        EXPECT_EQ(g.half_edges(), p.half_edges());
        EXPECT_EQ(generate(p, s).matching(), g.matching());
    }
}

TEST(Generate, MatchingIsUniform) {
    // three half-edges per side: all 3! bijections equally likely
    const auto p = make_pair({2, 1}, {2, 1});
    std::map<std::vector<std::int64_t>, int> counts;
    const int runs = 60000;
    for (int s = 0; s < runs; ++s) ++counts[generate(p, static_cast<std::uint64_t>(s)).matching()];
    ASSERT_EQ(counts.size(), 6u);
    for (const auto& [k, c] : counts) EXPECT_NEAR(c, runs / 6.0, 4 * std::sqrt(runs * (1.0 / 6) * (5.0 / 6)));
}

TEST(Generate, RejectsNonBijection) {
    const auto p = make_pair({1, 1}, {2});
    EXPECT_THROW(bipartite_multigraph(p, {0, 0}), structural_error);
    EXPECT_THROW(bipartite_multigraph(p, {0}), structural_error);
}

TEST(Components, TotalsAndOrdering) {
    for (std::uint64_t s = 0; s < 300; ++s) {
        const auto p = fixtures::random_small_pair(s);
        const auto g = generate(p, s + 1000);
        const auto dec = decompose(g);
        std::int64_t sr = 0, sl = 0, ec = 0;
        for (std::size_t i = 0; i < dec.records.size(); ++i) {
            const auto& c = dec.records[i];
            sr += c.size_r;
            sl += c.size_l;
            ec += c.edge_count;
            EXPECT_GE(c.surplus, 0);
            if (i > 0) {
                const auto& b = dec.records[i - 1];
                EXPECT_TRUE(b.size_r > c.size_r || (b.size_r == c.size_r && b.min_l < c.min_l));
            }
        }
        EXPECT_EQ(sr, p.m());
        EXPECT_EQ(sl, p.n());
        EXPECT_EQ(ec, p.half_edges());
    }
}

TEST(Components, AgreeWithBreadthFirstOracle) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto p = fixtures::random_small_pair(s);
        const auto g = generate(p, s);
        const auto dec = decompose(g);
        // BFS over l-vertices through the bipartite adjacency
        const auto nb = r_sets(g);
        std::vector<std::vector<std::int64_t>> l_adj(static_cast<std::size_t>(g.n()));
        for (std::size_t w = 0; w < nb.size(); ++w)
            for (auto v : nb[w]) l_adj[v].push_back(static_cast<std::int64_t>(w));
        std::vector<int> seen(static_cast<std::size_t>(g.n()), -1);
        for (std::int64_t v0 = 0; v0 < g.n(); ++v0) {
            if (seen[v0] >= 0) continue;
            std::vector<std::int64_t> q{v0};
            seen[v0] = 1;
            for (std::size_t h = 0; h < q.size(); ++h)
                for (auto w : l_adj[q[h]])
                    for (auto x : nb[w])
                        if (seen[x] < 0) seen[x] = 1, q.push_back(x);
            for (auto v : q) EXPECT_EQ(dec.comp_of_l[v], dec.comp_of_l[v0]);
            EXPECT_EQ(static_cast<std::int64_t>(q.size()), dec.records[dec.comp_of_l[v0]].size_l);
        }
    }
}

TEST(Rig, SingleHubGivesTriangle) {
    const auto g = from_edges({{0, 0}, {1, 0}, {2, 0}});
    const auto rig = project_rig(g);
    EXPECT_EQ(rig.edge_count, 3);
    const auto dec = decompose(g);
    const auto st = count_triangles(rig, g, dec);
    EXPECT_EQ(st.totals.total, 1);
    EXPECT_EQ(st.totals.type_one, 1);
    EXPECT_EQ(st.totals.type_two, 0);
    EXPECT_EQ(st.totals.proxy, 1);
}

TEST(Rig, RepeatedNeighbourCollapses) {
    const auto g = generate(make_pair({2}, {2}), 1);
    EXPECT_EQ(project_rig(g).edge_count, 0);
    EXPECT_EQ(distinct_l_neighbors(g, 0), (std::vector<std::int64_t>{0}));
}

TEST(Rig, FourCycleHasNoTriangle) {
    const auto g = from_edges({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const auto rig = project_rig(g);
    const auto st = count_triangles(rig, g, decompose(g));
    EXPECT_EQ(rig.edge_count, 1);
    EXPECT_EQ(st.totals.total, 0);
    EXPECT_EQ(st.totals.proxy, 0);
}

TEST(Rig, TypeTwoTriangle) {
    // three r-vertices of degree 2 around a 3-cycle of l-vertices
    const auto g = from_edges({{0, 0}, {0, 2}, {1, 0}, {1, 1}, {2, 1}, {2, 2}});
    const auto st = count_triangles(project_rig(g), g, decompose(g));
    EXPECT_EQ(st.totals.total, 1);
    EXPECT_EQ(st.totals.type_one, 0);
    EXPECT_EQ(st.totals.type_two, 1);
}

TEST(Rig, EdgeIffCommonNeighbour) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto g = generate(fixtures::random_small_pair(s, 20, 4), s);
        const auto rig = project_rig(g);
        const auto nb = r_sets(g);
        for (std::int64_t u = 0; u < g.n(); ++u) {
            EXPECT_FALSE(rig.has_edge(u, u));
            for (std::int64_t v = u + 1; v < g.n(); ++v) {
                bool common = false;
                for (const auto& x : nb) common = common || (x.count(u) && x.count(v));
                EXPECT_EQ(rig.has_edge(u, v), common);
                EXPECT_EQ(rig.has_edge(v, u), common);
            }
        }
        EXPECT_EQ(project_rig(g).adj, rig.adj);
    }
}

TEST(Triangles, MatchBruteForceOracle) {
    for (std::uint64_t s = 0; s < 300; ++s) {
        const auto p = fixtures::random_small_pair(s, 30, 5);
        const auto g = generate(p, 7 * s);
        const auto dec = decompose(g);
        const auto st = count_triangles(project_rig(g), g, dec);
        const auto bf = brute_force(g);
        EXPECT_EQ(st.totals.total, bf.total) << "seed " << s;
        EXPECT_EQ(st.totals.type_one, bf.type_one) << "seed " << s;
        for (std::size_t i = 0; i < st.per_component.size(); ++i) {
            const auto& c = st.per_component[i];
            EXPECT_EQ(c.total, c.type_one + c.type_two);
            if (dec.records[i].surplus == 0) {
                EXPECT_EQ(c.total, c.proxy);
            }
        }
    }
}

TEST(Triangles, PrefixCounterMatchesFullCount) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto g = generate(fixtures::random_small_pair(s), s);
        prefix_triangle_counter pc(g);
        for (std::int64_t w = 0; w < g.m(); ++w) pc.add_r_vertex(w);
        EXPECT_EQ(pc.triangles(), count_triangles(project_rig(g), g, decompose(g)).totals.total);
    }
}

TEST(Triangles, PrefixBoundAlongExploration) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto g = generate(fixtures::random_small_pair(s), s);
        const auto tr = explore(g, s);
        for (const auto& row : triangle_prefix_rows(g, tr)) {
            EXPECT_LE(std::abs(static_cast<double>(row.triangles - row.proxy)), row.bound);
            if (row.cn == 0) {
                EXPECT_EQ(row.triangles, row.proxy);
            }
        }
    }
}

TEST(EdgeList, RoundTripReproducesMatching) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto g = generate(fixtures::random_small_pair(s), s);
        std::stringstream ss;
        write_edge_list(ss, g);
        const auto h = read_edge_list(ss);
        EXPECT_EQ(h.pair().d_l, g.pair().d_l);
        EXPECT_EQ(h.pair().d_r, g.pair().d_r);
        std::vector<std::pair<std::int64_t, std::int64_t>> a, b;
        for (std::int64_t e = 0; e < g.half_edges(); ++e) {
            a.emplace_back(g.owner_l(e), g.owner_r(g.mate_of_l(e)));
            b.emplace_back(h.owner_l(e), h.owner_r(h.mate_of_l(e)));
        }
        EXPECT_EQ(a, b);
    }
}

TEST(EdgeList, RejectsMalformedInput) {
    std::istringstream empty("# 1 1\n");
    EXPECT_THROW(read_edge_list(empty), io_error);
    std::istringstream junk("0 x\n");
    EXPECT_THROW(read_edge_list(junk), io_error);
    std::istringstream isolated("# 3 1\n0 0\n1 0\n");
    EXPECT_THROW(read_edge_list(isolated), io_error);
}
