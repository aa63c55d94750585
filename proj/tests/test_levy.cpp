#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <bcmlab/levy.hpp>
#include <bcmlab/stats.hpp>

using namespace bcmlab;

namespace {

grid_path fixture(std::vector<double> v, double dt = 1.0) { return {dt, std::move(v)}; }

void expect_partition_and_nesting(const grid_path& f) {
    const auto es = excursions(f, std::numeric_limits<std::size_t>::max());
    double total = es.time_at_minimum + es.open_tail;
    for (const auto& e : es.top) total += e.length;
    EXPECT_NEAR(total, f.horizon(), 1e-9 * (1 + f.horizon()));

    auto iv = es.top;
    std::sort(iv.begin(), iv.end(), [](const auto& a, const auto& b) { return a.l < b.l; });
    double run_min = f.values[0];
    std::size_t scanned = 0;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        if (i > 0) {
            EXPECT_LE(iv[i - 1].r, iv[i].l);
        }
        for (; scanned <= iv[i].l; ++scanned) run_min = std::min(run_min, f.values[scanned]);
        EXPECT_EQ(f.values[iv[i].l], run_min);
        for (std::size_t k = iv[i].l + 1; k < iv[i].r; ++k) EXPECT_GT(f.values[k], run_min);
        EXPECT_LE(f.values[iv[i].r], run_min);
    }
}

levy_params mixed_params() { return {1.0, 1.5, 0.3, {1.2, 0.7, 0.4}, 0.0}; }

} // namespace

TEST(Simulate, ZeroParamsGiveZeroPath) {
    const auto lp = simulate(levy_params{}, 0.01, 1.0, 3);
    EXPECT_EQ(lp.path.size(), 101u);
    for (double v : lp.path.values) EXPECT_EQ(v, 0.0);
}

TEST(Simulate, StartsAtZeroAndIsDeterministic) {
    const auto a = simulate(mixed_params(), 1e-3, 2.0, 42);
    const auto b = simulate(mixed_params(), 1e-3, 2.0, 42);
    EXPECT_EQ(a.path.values[0], 0.0);
    EXPECT_EQ(a.path.values, b.path.values);
    EXPECT_NE(simulate(mixed_params(), 1e-3, 2.0, 43).path.values, a.path.values);
}

TEST(Simulate, CompensatedJumpMean) {
    const levy_params p{0.0, 0.0, 0.0, {1.0}, 0.0};
    std::vector<double> w1;
    for (int s = 0; s < 10000; ++s) w1.push_back(simulate(p, 1e-3, 1.0, s).path.values.back());
    const auto st = summarize(w1);
    EXPECT_NEAR(st.mean, (1.0 - std::exp(-1.0)) - 1.0, 4 * st.std_error);
}

TEST(Simulate, GaussianMoments) {
    const levy_params p{1.0, 1.0, 0.0, {}, 0.0};
    std::vector<double> w1;
    for (int s = 0; s < 10000; ++s) w1.push_back(simulate(p, 1e-3, 1.0, s).path.values.back());
    const auto st = summarize(w1);
    EXPECT_NEAR(st.mean, -0.5, 4 * st.std_error);
    EXPECT_NEAR(st.variance, 1.0, 4 * variance_std_error(w1));
}

TEST(Simulate, JumpsLandOnTheRightGridIndex) {
    const levy_params p{0.0, 0.0, 0.0, {2.0}, 0.0};
    const levy_noise z{{}, {0.25}};
    const auto lp = simulate(p, 0.1, 10, z);
    // clock in (0.2, 0.3] contributes from index 3 on
    EXPECT_NEAR(lp.path.values[2], -4.0 * 0.2, 1e-12);
    EXPECT_NEAR(lp.path.values[3], 2.0 - 4.0 * 0.3, 1e-12);
    ASSERT_EQ(lp.jumps.size(), 1u);
    EXPECT_EQ(lp.jumps[0].second, 0.25);
}

TEST(Simulate, RejectsInvalidParams) {
    EXPECT_THROW(simulate(levy_params{1.0, 0.0, 0.0, {}, 0.0}, 0.1, 1.0, 1), precondition_error);
    EXPECT_THROW(simulate(levy_params{0.0, 0.0, 0.0, {1.0, 2.0}, 0.0}, 0.1, 1.0, 1), precondition_error);
    EXPECT_THROW(simulate(levy_params{}, 2.0, 1.0, 1), precondition_error);
}

TEST(Params, RescaleExamples) {
    const levy_params p{1.0, 1.0, 2.0, {1.0}, 0.0};
    const auto id = rescale_params(p, 1.0);
    EXPECT_EQ(id.kappa, 1.0);
    EXPECT_EQ(id.beta, p.beta);
    const auto q = rescale_params(p, 2.0);
    EXPECT_EQ(q.kappa, 8.0);
    EXPECT_EQ(q.rho, 8.0);
    EXPECT_EQ(q.lambda, 8.0);
    EXPECT_EQ(q.beta, std::vector<double>{2.0});
}

TEST(Params, BridgeIdentity) {
    // time change by sqrt(theta) followed by the space factor theta^{-1/2}
    for (double theta : {0.5, 1.0, 2.0, 4.0}) {
        const double lam = 0.7, u = 1 + 1 / std::sqrt(theta), c = 1 / std::sqrt(theta);
        const levy_params p{1 / theta + 1 / std::sqrt(theta), std::pow(theta, -1.5) + 1 / theta,
                            2 * lam / std::sqrt(theta), {}, 0.0};
        const auto q = rescale_params(p, std::sqrt(theta));
        EXPECT_NEAR(c * c * q.kappa, u, 1e-12);
        EXPECT_NEAR(c * q.rho, u, 1e-12);
        EXPECT_NEAR(c * q.lambda, 2 * lam, 1e-12);
    }
}

TEST(Params, MergeExamples) {
    const levy_params a{1.0, 2.0, 0.5, {3.0, 1.0}, 0.0}, b{0.5, 0.25, -1.0, {2.0, 2.0}, 0.0};
    const auto m = merge_params(a, b);
    EXPECT_EQ(m.kappa, 1.5);
    EXPECT_EQ(m.rho, 2.25);
    EXPECT_EQ(m.lambda, -0.5);
    EXPECT_EQ(m.beta, (std::vector<double>{3, 2, 2, 1}));
    const auto z = merge_params(a, levy_params{});
    EXPECT_EQ(z.kappa, a.kappa);
    EXPECT_EQ(z.beta, a.beta);
}

TEST(Params, MergedSidesReproduceCombinedConstants) {
    const auto p = build_heavy_tail(2000, 1.3, 0.4, 3.3, 0);
    const auto c = compute_limit_constants(p, 0.4);
    const double tau = c.reg.tau;
    levy_params left{0, 0, 0.4, c.beta_l, 0}, right{0, 0, 0, c.beta_r, 0};
    for (auto& b : left.beta) b *= c.nu_inf_r / c.mu1_l;
    for (auto& b : right.beta) b *= std::pow(c.theta, 1 / (tau - 1)) / c.mu1_l;
    const auto m = merge_params(left, right);
    ASSERT_EQ(m.beta.size(), c.beta_merged.size());
    for (std::size_t i = 0; i < m.beta.size(); ++i) EXPECT_NEAR(m.beta[i], c.beta_merged[i], 1e-12);

    const auto f = constants_from_moments(moments(p).mu_l, moments(p).mu_r, p.theta(), 0.0);
    const double nr3 = std::pow(f.nu_inf_r, 3);
    const auto g = merge_params({nr3 * f.kappa_l, nr3 * f.rho_l, 0, {}, 0}, {f.kappa_r, f.rho_r / p.theta(), 0, {}, 0});
    EXPECT_NEAR(g.kappa, f.kappa, 1e-12 * f.kappa);
    EXPECT_NEAR(g.rho, f.rho, 1e-12 * f.rho);
}

TEST(Params, ScalingCoupling) {
    for (double a : {0.5, 2.0, 3.0}) {
        const auto p = mixed_params();
        const auto q = rescale_params(p, a);
        const double dt = 1e-3;
        const std::size_t steps = 3000;
        auto rng = make_rng(5);
        auto z = draw_noise(p, steps, rng);
        const auto w1 = simulate(p, a * dt, steps, z);
        for (auto& t : z.clocks) t /= a;
        const auto w2 = simulate(q, dt, steps, z);
        double dev = 0, scale = 0;
        for (std::size_t i = 0; i <= steps; ++i) {
            dev = std::max(dev, std::abs(a * w1.path.values[i] - w2.path.values[i]));
            scale = std::max(scale, std::abs(w2.path.values[i]));
        }
        EXPECT_LE(dev, 1e-9 * (1 + scale)) << "a = " << a;
    }
}

TEST(Excursions, SixPointFixture) {
    const auto es = excursions(fixture({0, 1, -1, 2, 1, -2}));
    ASSERT_EQ(es.top.size(), 2u);
    EXPECT_EQ(es.top[0].l, 2u);
    EXPECT_EQ(es.top[0].r, 5u);
    EXPECT_EQ(es.top[0].length, 3.0);
    EXPECT_EQ(es.top[1].l, 0u);
    EXPECT_EQ(es.top[1].r, 2u);
    EXPECT_EQ(es.lengths(), (std::vector<double>{3, 2}));
}

TEST(Excursions, DecreasingPathHasNone) {
    const auto es = excursions(fixture({0, -1, -2, -3}));
    EXPECT_TRUE(es.top.empty());
    EXPECT_EQ(es.time_at_minimum, 3.0);
}

TEST(Excursions, ReturnToMinimumCloses) {
    const auto es = excursions(fixture({0, 1, 0}));
    ASSERT_EQ(es.top.size(), 1u);
    EXPECT_EQ(es.top[0].l, 0u);
    EXPECT_EQ(es.top[0].r, 2u);
    EXPECT_EQ(es.top[0].length, 2.0);
}

TEST(Excursions, TiesBrokenByAppearanceAndTopK) {
    const auto es = excursions(fixture({0, 1, 0, 1, 0, 2, 3, -1, 5, -2}), 2);
    ASSERT_EQ(es.top.size(), 2u);
    EXPECT_EQ(es.top[0].l, 4u);
    EXPECT_EQ(es.top[1].l, 0u);
    EXPECT_EQ(es.total_count, 4u);
    EXPECT_EQ(es.rest_length, 4.0);
}

TEST(Excursions, OpenTailIsReported) {
    const auto es = excursions(fixture({0, -1, 1, 2}, 0.5));
    EXPECT_TRUE(es.top.empty());
    ASSERT_TRUE(es.open_start.has_value());
    EXPECT_EQ(*es.open_start, 1u);
    EXPECT_EQ(es.open_tail, 1.0);
}

TEST(Excursions, RandomPathsPartitionWithoutNesting) {
    for (int s = 0; s < 200; ++s) {
        const auto lp = simulate(mixed_params(), 1e-3, 3.0, s);
        expect_partition_and_nesting(lp.path);
    }
}

TEST(Excursions, GridRefinementIsStable) {
    const auto p = mixed_params();
    const double dt = 2e-3, T = 4.0;
    const auto steps = grid_steps(dt, T);
    const int paths = 1000;
    double coarse_total = 0, fine_total = 0;
    for (int s = 0; s < paths; ++s) {
        auto rng = make_rng(s);
        auto fine = draw_noise(p, 2 * steps, rng);
        levy_noise coarse{std::vector<double>(steps), fine.clocks};
        for (std::size_t i = 0; i < steps; ++i)
            coarse.normals[i] = (fine.normals[2 * i] + fine.normals[2 * i + 1]) / std::sqrt(2.0);
        const auto a = excursions(simulate(p, dt, steps, coarse).path, 1).lengths();
        const auto b = excursions(simulate(p, dt / 2, 2 * steps, fine).path, 1).lengths();
        ASSERT_FALSE(a.empty() || b.empty());
        coarse_total += a[0];
        fine_total += b[0];
    }
    EXPECT_LT(std::abs(coarse_total - fine_total) / paths, 2 * dt);
}

TEST(Excursions, SuperpositionMatchesMergedParams) {
    const levy_params p1{1.0, 1.0, 0.0, {0.9}, 0.0}, p2{0.5, 1.0, 0.2, {0.6, 0.3}, 0.0};
    const auto pm = merge_params(p1, p2);
    const double dt = 2e-3, T = 8.0;
    const int paths = 1000;
    std::array<std::vector<double>, 3> sum_heads, merged_heads;
    for (int s = 0; s < paths; ++s) {
        auto a = simulate(p1, dt, T, derive_seed(s, 1)).path;
        const auto b = simulate(p2, dt, T, derive_seed(s, 2)).path;
        for (std::size_t i = 0; i < a.size(); ++i) a.values[i] += b.values[i];
        auto ha = excursions(a, 3).lengths();
        auto hm = excursions(simulate(pm, dt, T, derive_seed(s, 3)).path, 3).lengths();
        ha.resize(3, 0.0);
        hm.resize(3, 0.0);
        for (int j = 0; j < 3; ++j) {
            sum_heads[j].push_back(ha[j]);
            merged_heads[j].push_back(hm[j]);
        }
    }
    for (int j = 0; j < 3; ++j) {
        const auto x = summarize(sum_heads[j]), y = summarize(merged_heads[j]);
        EXPECT_LE(std::abs(x.mean - y.mean), 3 * std::hypot(x.std_error, y.std_error)) << "rank " << j + 1;
    }
}

TEST(GammaInfinity, IdentityMarksAreLengths) {
    const auto f = fixture({0, 1, -1, 2, 1, -2});
    const auto g = fixture({0, 1, 2, 3, 4, 5});
    EXPECT_EQ(gamma_infinity(f, g), (std::vector<double>{3, 2}));
    EXPECT_EQ(gamma_infinity(f, fixture(std::vector<double>(6, 4.0))), (std::vector<double>{0, 0}));
}

TEST(GammaInfinity, StepInsideFirstExcursion) {
    const auto f = fixture({0, 1, -1, 2, 1, -2});
    const auto g = fixture({0, 0, 0, 1, 1, 1});
    EXPECT_EQ(gamma_infinity(f, g), (std::vector<double>{1, 0}));
    const auto es = marked_excursions(f, g);
    ASSERT_TRUE(es.top[0].mark.has_value());
    EXPECT_EQ(*es.top[0].mark, 1.0);
}

TEST(GammaInfinity, GridMismatchThrows) {
    EXPECT_THROW(gamma_infinity(fixture({0, 1, 0}), fixture({0, 1})), precondition_error);
    EXPECT_THROW(gamma_infinity(fixture({0, 1, 0}), fixture({0, 1, 2}, 0.5)), precondition_error);
}

TEST(LevyIO, PathAndExcursionCsv) {
    const auto lp = simulate(mixed_params(), 0.01, 1.0, 3);
    std::stringstream ss;
    write_path_csv(ss, lp.path);
    const auto back = read_path_csv(ss);
    EXPECT_EQ(back.values, lp.path.values);
    EXPECT_DOUBLE_EQ(back.dt, 0.01);

    std::ostringstream os;
    write_excursions_csv(os, marked_excursions(fixture({0, 1, -1, 2, 1, -2}), fixture({0, 1, 2, 3, 4, 5})));
    EXPECT_EQ(os.str(), "l,r,length,mark\n2,5,3,3\n0,2,2,2\n");

    std::istringstream beta("# head\n1.5\n0.5\n\n0.25\n");
    EXPECT_EQ(read_beta(beta), (std::vector<double>{1.5, 0.5, 0.25}));
    std::istringstream bad("0.5\n1.5\n");
    EXPECT_THROW(read_beta(bad), io_error);
}
