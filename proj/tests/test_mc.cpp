#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include <bcmlab/mc.hpp>

#include "support.hpp"

using namespace bcmlab;

namespace {

// Ordered two-edge paths centred on each vertex: pairs of half-edges whose
// far ends are distinct vertices.
std::pair<double, double> two_paths_closed_form(const bipartite_multigraph& g) {
    std::vector<std::map<std::int64_t, std::int64_t>> at_r(static_cast<std::size_t>(g.m())),
        at_l(static_cast<std::size_t>(g.n()));
    for (std::int64_t e = 0; e < g.half_edges(); ++e) {
        const auto v = g.owner_l(e), w = g.owner_r(g.mate_of_l(e));
        ++at_r[w][v];
        ++at_l[v][w];
    }
    auto count = [](const std::vector<std::map<std::int64_t, std::int64_t>>& at) {
        double total = 0;
        for (const auto& mult : at) {
            std::int64_t d = 0, sq = 0;
            for (auto [x, k] : mult) d += k, sq += k * k;
            total += static_cast<double>(d * d - sq);
        }
        return total;
    };
    return {count(at_r), count(at_l)};
}

} // namespace

TEST(Parallel, ResultsIndependentOfThreadCount) {
    std::vector<double> a(97), b(97);
    parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = std::sqrt(static_cast<double>(derive_seed(3, i) % 1000)); });
    parallel_for(b.size(), 4, [&](std::size_t i) { b[i] = std::sqrt(static_cast<double>(derive_seed(3, i) % 1000)); });
    EXPECT_EQ(a, b);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw structural_error("boom"); }),
                 structural_error);
}

TEST(Ensemble, ForcedStarSingleReplica) {
    ensemble_config cfg;
    cfg.pair = make_pair({1, 1}, {2});
    cfg.replicas = 1;
    cfg.reference_replicas = 0;
    cfg.top_k = 1;
    const auto es = run_ensemble(cfg);
    const double bn = std::pow(2.0, 2.0 / 3.0);
    ASSERT_EQ(es.replicas.size(), 1u);
    ASSERT_EQ(es.replicas[0].by_r.size(), 1u);
    EXPECT_NEAR(es.replicas[0].by_r[0].size_r, 1 / bn, 1e-12);
    EXPECT_NEAR(es.replicas[0].by_r[0].size_l, 2 / bn, 1e-12);
    EXPECT_TRUE(es.replicas[0].invariants_ok);
}

TEST(Ensemble, PoissonReferenceConstants) {
    auto poisson = [](double a) {
        std::array<double, 5> mu{};
        double w = std::exp(-a);
        for (int k = 0; k < 200; ++k) {
            if (k > 0) w *= a / k;
            for (int p = 1; p <= 4; ++p) mu[p] += w * std::pow(k, p);
        }
        return mu;
    };
    const auto ref = reference_params(constants_from_moments(poisson(1.0), poisson(1.0), 1.0, 0.0));
    EXPECT_NEAR(ref.kappa, 2.0, 1e-10);
    EXPECT_NEAR(ref.rho, 2.0, 1e-10);
    EXPECT_EQ(ref.lambda, 0.0);
    EXPECT_TRUE(ref.beta.empty());
}

TEST(Ensemble, KsAgainstItselfIsZero) {
    const std::vector<double> x{0.3, 0.1, 0.1, 0.7, 0.2};
    EXPECT_EQ(ks_distance(x, x), 0.0);
    EXPECT_EQ(ks_distance({0.0}, {1.0}), 1.0);
    EXPECT_NEAR(ks_distance({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5, 1e-15);
}

TEST(Ensemble, DeterministicAcrossThreadCounts) {
    ensemble_config cfg;
    cfg.pair = build_finite_third(1000, 1.0, 0.0, truncated_poisson(1.0, 10), 4);
    cfg.replicas = 12;
    cfg.reference_replicas = 20;
    cfg.pilot_paths = 20;
    cfg.seed = 77;
    cfg.threads = 1;
    const auto a = run_ensemble(cfg);
    cfg.threads = 3;
    const auto b = run_ensemble(cfg);
    ASSERT_EQ(a.replicas.size(), b.replicas.size());
    for (std::size_t i = 0; i < a.replicas.size(); ++i)
        for (std::size_t j = 0; j < a.replicas[i].by_r.size(); ++j) {
            EXPECT_EQ(a.replicas[i].by_r[j].size_r, b.replicas[i].by_r[j].size_r);
            EXPECT_EQ(a.replicas[i].by_r[j].triangles, b.replicas[i].by_r[j].triangles);
        }
    EXPECT_EQ(a.reference_heads, b.reference_heads);
    EXPECT_EQ(a.horizon.T, b.horizon.T);
    for (std::size_t j = 0; j < a.ks.size(); ++j) EXPECT_EQ(a.ks[j].r_by_r, b.ks[j].r_by_r);
}

TEST(Ensemble, StructuralInvariants) {
    ensemble_config cfg;
    cfg.pair = build_finite_third(3000, 1.0, 0.0, truncated_poisson(1.0, 14), 9);
    cfg.replicas = 30;
    cfg.reference_replicas = 100;
    cfg.pilot_paths = 100;
    cfg.threads = 2;
    const auto es = run_ensemble(cfg);
    EXPECT_EQ(es.invariant_failures, 0u);
    for (const auto& r : es.replicas) {
        for (std::size_t j = 1; j < r.by_r.size(); ++j) EXPECT_GE(r.by_r[j - 1].size_r, r.by_r[j].size_r);
        for (std::size_t j = 1; j < r.by_l.size(); ++j) EXPECT_GE(r.by_l[j - 1].size_l, r.by_l[j].size_l);
    }
    std::size_t positive = 0;
    for (const auto& h : es.reference_heads) {
        EXPECT_TRUE(std::is_sorted(h.begin(), h.end(), std::greater<>{}));
        positive += h[0] > 0;
    }
    EXPECT_GE(positive, es.reference_heads.size() * 99 / 100);
    EXPECT_TRUE(es.horizon.converged);
    EXPECT_GE(es.horizon.pilot_fraction, 0.99);
    for (const auto& row : es.ks)
        for (double d : {row.r_by_r, row.l_by_r, row.r_by_l, row.l_by_l}) {
            EXPECT_GE(d, 0.0);
            EXPECT_LE(d, 1.0);
        }
}

TEST(Ensemble, DegenerateConstantsNeedOverride) {
    ensemble_config cfg;
    cfg.pair = make_pair(degree_vec(6, 2), degree_vec(6, 2));
    cfg.replicas = 2;
    cfg.reference_replicas = 5;
    EXPECT_THROW(run_ensemble(cfg), degeneracy_error);
    cfg.reference_override = levy_params{2.0, 2.0, 0.0, {}, 0.0};
    cfg.pilot_paths = 10;
    EXPECT_NO_THROW(run_ensemble(cfg));
}

TEST(Horizon, DefaultAndCalibration) {
    const levy_params p{2.0, 2.0, 0.0, {}, 0.0};
    const double T0 = default_horizon(p);
    EXPECT_NEAR(0.5 * p.rho * T0 * T0, 10 * std::sqrt(p.kappa * T0), 1e-9);
    auto sample = [&](double T, std::uint64_t s) { return simulate(p, 1e-3, T, s).path; };
    const auto h = calibrate_horizon(sample, T0, 100, 5, 1);
    EXPECT_TRUE(h.converged);
    EXPECT_GE(h.T, T0);
    EXPECT_FALSE(drift_dominates(grid_path{1.0, {0, 1}}));
    EXPECT_TRUE(drift_dominates(grid_path{1.0, {0, 1, 2, -1, -3}}));
}

TEST(Susceptibility, PerfectMatchingIsTight) {
    const auto rep = susceptibility_check(make_pair(degree_vec(20, 1), degree_vec(20, 1)), 10, 1);
    EXPECT_EQ(rep.estimate_r, 1.0);
    EXPECT_EQ(rep.estimate_l, 1.0);
    EXPECT_EQ(rep.bound_r, 1.0);
    EXPECT_TRUE(rep.pass());
}

TEST(Susceptibility, FourVertexFamily) {
    const auto p = make_pair({3, 1, 1, 1}, {2, 2, 1, 1});
    const auto rep = susceptibility_check(p, 2000, 3);
    EXPECT_NEAR(rep.bound_r, 5.5, 1e-12);
    EXPECT_NEAR(rep.bound_l, 1 + (2.0 / 3.0) * 1.5 * 3, 1e-12);
    EXPECT_TRUE(rep.pass());
}

TEST(Susceptibility, RejectsCriticalPairs) {
    EXPECT_THROW(susceptibility_check(make_pair(degree_vec(4, 2), degree_vec(4, 2)), 10, 1), precondition_error);
}

TEST(Paths, PerfectMatchingHasNone) {
    const auto rep = path_count_check(make_pair(degree_vec(5, 1), degree_vec(5, 1)), 1, 20, 1);
    EXPECT_EQ(rep.mean_l, 0.0);
    EXPECT_EQ(rep.bound_l, 0.0);
    EXPECT_TRUE(rep.pass);
}

TEST(Paths, StarCountingConvention) {
    const auto g = generate(make_pair({1, 1}, {2}), 1);
    const auto pc = count_paths(g, 1);
    EXPECT_EQ(pc.ordered_l, 2.0);
    const auto rep = path_count_check(make_pair({1, 1}, {2}), 1, 5, 1);
    EXPECT_EQ(rep.mean_l, 1.0);
    EXPECT_EQ(rep.mean_l_ordered, 2.0);
    EXPECT_EQ(rep.bound_l, 2.0);
    EXPECT_TRUE(rep.pass);
    EXPECT_TRUE(rep.pass_ordered);
}

TEST(Paths, TooLongPathsVanish) {
    const auto rep = path_count_check(make_pair({2, 2, 1}, {3, 2}), 4, 10, 2);
    EXPECT_EQ(rep.mean_l, 0.0);
    EXPECT_EQ(rep.mean_r, 0.0);
    EXPECT_TRUE(rep.pass);
}

TEST(Paths, TwoEdgeCountsMatchClosedForm) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto g = generate(fixtures::random_small_pair(s, 20, 4), s);
        const auto pc = count_paths(g, 1);
        const auto [l, r] = two_paths_closed_form(g);
        EXPECT_EQ(pc.ordered_l, l);
        EXPECT_EQ(pc.ordered_r, r);
    }
}

TEST(Paths, SizeGuard) {
    EXPECT_THROW(path_count_check(make_pair(degree_vec(30, 1), degree_vec(30, 1)), 1, 10, 1), precondition_error);
}

TEST(Triangles, FactorExamples) {
    EXPECT_EQ(triangle_factor(degree_vec(10, 3)), 1.0);
    EXPECT_NEAR(poisson_triangle_factor(1.0), 2.0 / 3.0, 1e-15);
    EXPECT_EQ(triangle_factor(degree_vec(10, 2)), 0.0);
    // X* - 1 ~ Poisson(a): E[C(X*, 3)] by direct summation
    for (double a : {0.5, 1.0, 2.0}) {
        double e = 0, w = std::exp(-a);
        for (int k = 0; k < 200; ++k) {
            if (k > 0) w *= a / k;
            e += w * static_cast<double>(choose3(k + 1));
        }
        EXPECT_NEAR(poisson_triangle_factor(a), e, 1e-12);
    }
}

TEST(Triangles, FiniteThirdReportShape) {
    ensemble_config cfg;
    cfg.pair = build_finite_third(2000, 1.0, 0.0, truncated_poisson(1.0, 12), 3);
    cfg.replicas = 20;
    cfg.reference_replicas = 0;
    const auto rep = triangle_limit_check(cfg);
    EXPECT_NEAR(rep.factor, triangle_factor(cfg.pair.d_r), 1e-15);
    ASSERT_EQ(rep.rows.size(), 3u);
    for (const auto& row : rep.rows) {
        EXPECT_GE(row.empirical_mean, 0.0);
        EXPECT_GE(row.predicted_mean, 0.0);
    }
}

TEST(Triangles, HeavyMarksDominatedByHub) {
    const auto p = build_heavy_tail(2000, 1.0, 0.0, 3.5, 0);
    const auto c = compute_limit_constants(p, 0.0);
    const auto pth = heavy_triangle_sample(c, 1e-3, 2.0, 5);
    EXPECT_EQ(pth.T.values[0], 0.0);
    EXPECT_TRUE(std::is_sorted(pth.T.values.begin(), pth.T.values.end()));
    double total = 0;
    for (double b : c.beta_r) total += b * b * b / 6;
    EXPECT_LE(pth.T.values.back(), total + 1e-12);

    ensemble_config cfg;
    cfg.pair = p;
    cfg.replicas = 10;
    cfg.reference_replicas = 40;
    cfg.pilot_paths = 40;
    const auto rep = triangle_limit_check(cfg);
    EXPECT_NEAR(rep.hub_term, std::pow(c.beta_r.front(), 3) / 6, 1e-12);
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_GT(rep.rows[0].predicted_mean, 0.0);
}
