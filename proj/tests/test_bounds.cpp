#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "optpac/bounds.hpp"
#include "optpac/bpi_ucrl.hpp"
#include "optpac/instances.hpp"
#include "optpac/oracles.hpp"

using namespace optpac;

// Reference values computed independently in 50-digit arithmetic.
TEST(Bounds, FrozenValues) {
    EXPECT_NEAR(solve_log_inequality(1, 1), 2.0986122886681098, 1e-14);
    EXPECT_NEAR(pac_lower_bound(8, 3, 0.1, 0.01), 482.83137373023011, 1e-10);
    EXPECT_NEAR(t_eps_upper_bound(8, 3, 4, 0.2, 0.1), 161653.31079184777, 1e-7);
    EXPECT_NEAR(beta_upper(100, 4, 2, 3, 0.05), 126.04471493865969, 1e-11);
    EXPECT_NEAR(worst_case_bound(3, 2, 3, 0.1, 0.2), 27976.408879877655, 1e-8);
}

TEST(Bounds, DomainChecks) {
    EXPECT_THROW(pac_lower_bound(8, 3, 0.1, 0.25), std::domain_error);
    EXPECT_THROW(solve_log_inequality(0.5, 2), std::domain_error);
    EXPECT_THROW(beta_upper(0.5, 2, 2, 2, 0.1), std::domain_error);
    TreeSpec spec;
    const GapReport g = gap_report(tree_mdp(spec));
    EXPECT_THROW(implicit_sample_rhs(0, g, 0.1, 0.1), std::domain_error);
    EXPECT_THROW(explicit_sample_bound(g, 0.1, 0.0), std::domain_error);
    const BoundReport r = bound_report(g, 0.3, 0.1);
    EXPECT_TRUE(std::isnan(r.pac_lower));
}

TEST(Bounds, LogInequalitySolution) {
    // x <= B log x + C has no solution above the returned value.
    for (double B : {1.0, 3.0, 50.0, 1e4})
        for (double C : {1.0, 10.0, 1e3, 1e6}) {
            const double x = solve_log_inequality(B, C);
            for (double k : {1.0, 1.5, 4.0, 100.0}) EXPECT_GT(k * x, B * std::log(k * x) + C) << B << ' ' << C;
        }
}

TEST(Bounds, BetaUpperDominatesPreviousThreshold) {
    for (int S : {1, 2, 5, 16})
        for (double t = 1; t < 1e9; t *= 3.7)
            EXPECT_GE(beta_upper(t, S, 3, 4, 0.1), threshold_beta(t - 1, 0.1, S, 3, 4)) << S << ' ' << t;
}

TEST(Bounds, ExplicitBoundRecomputed) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    const GapReport g = gap_report(mdp);
    const double delta = 0.1, eps = 0.2;
    const double L = std::log(3.0 * 3 * 2 * 3 / delta);
    double pmin = kInf;
    for (int h = 1; h <= 3; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a)
                if (g.reachable(h, s, a)) pmin = std::min(pmin, g.p_min(h, s, a));
    double total = 0.0, c = 0.0;
    for (int h = 1; h <= 3; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) {
                if (!g.reachable(h, s, a)) continue;
                const double m = std::max(g.cond_return_gap(h, s, a), eps);
                const double w = 81.0 / (g.p_min(h, s, a) * m * m);
                c += w;
                total += w * (720 * L + 1729 * 3 * std::log(1152.0 * 9 * 2 * 243 * L / (pmin * eps * eps)));
            }
    const ExplicitBound e = explicit_sample_bound(g, delta, eps);
    EXPECT_NEAR(e.total, total, 1e-9 * total);
    EXPECT_EQ(e.p_min_global, pmin);
    EXPECT_NEAR(c_epsilon(g, eps), c, 1e-12 * c);
    double parts = 0.0;
    for (double x : e.contribution.raw()) parts += x;
    EXPECT_NEAR(parts, e.total, 1e-9 * total);
}

TEST(Bounds, ChainIsOrdered) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const GapReport g = gap_report(random_mdp(3, 2, 3, seed, seed % 2 == 1));
        for (double eps : {0.05, 0.2, 1.0}) {
            const BoundChain c = bound_chain(g, 0.1, eps);
            const double explicit_total = explicit_sample_bound(g, 0.1, eps).total;
            EXPECT_LE(c.solved, c.simplified);
            EXPECT_LE(c.simplified, explicit_total * (1 + 1e-12));
            // Beyond the explicit bound the implicit inequality cannot hold.
            for (double k : {1.0, 2.0, 10.0}) {
                const auto tau = static_cast<std::uint64_t>(std::ceil(k * explicit_total));
                EXPECT_FALSE(implicit_sample_check(tau, g, 0.1, eps)) << seed << ' ' << eps << ' ' << k;
            }
            EXPECT_TRUE(implicit_sample_check(1, g, 0.1, eps));
        }
    }
}

TEST(Bounds, TargetingBound) {
    TreeSpec spec;
    const GapReport g = gap_report(tree_mdp(spec));
    const int goal = tree_reward_state(spec);
    EXPECT_EQ(targeting_bound(g, 1, 3, 0, 10, 0.1, 0.1), kInf);
    EXPECT_EQ(targeting_bound(g, spec.horizon, goal, 2, 10, 0.1, 0.1), kInf);
    const double expected = 144.0 * 256 * threshold_beta(10, 0.1, 8, 3, 4) / (0.2 * 0.2);
    EXPECT_NEAR(targeting_bound(g, spec.horizon, goal, 1, 10, 0.1, 0.1), expected, 1e-9 * expected);
}

TEST(Bounds, ReportCsv) {
    TreeSpec spec;
    const GapReport g = gap_report(tree_mdp(spec));
    std::ostringstream out;
    write_bound_report(out, bound_report(g, 0.1, 0.2), g);
    const std::string text = out.str();
    EXPECT_EQ(text.rfind("bound,value\n", 0), 0u);
    EXPECT_NE(text.find("h,s,a,contribution"), std::string::npos);
}
