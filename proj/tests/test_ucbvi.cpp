#include <gtest/gtest.h>

#include <cmath>

#include "optpac/errors.hpp"
#include "optpac/instances.hpp"
#include "optpac/oracles.hpp"
#include "optpac/ucbvi.hpp"

using namespace optpac;

namespace {

TreeSpec tree(double delta) {
    TreeSpec spec;
    spec.delta = delta;
    return spec;
}

}  // namespace

TEST(Ucbvi, FirstPolicyIsLowestIndex) {
    const Mdp mdp = tree_mdp(tree(0.2));
    AgentState st = make_ucbvi_state(mdp);
    EXPECT_EQ(st.rule(), BonusRule::Ucbvi);
    Rng rng(0);
    const UcbviStep step = ucbvi_episode(st, mdp, rng);
    EXPECT_TRUE(step.policy == first_available_policy(mdp));
    EXPECT_EQ(st.episodes(), 1u);
    EXPECT_EQ(step.trajectory.horizon(), 4);
}

TEST(Ucbvi, TreeRegretCountsBadPulls) {
    const TreeSpec spec = tree(0.2);
    const Mdp mdp = tree_mdp(spec);
    Rng rng(5);
    const RegretTrace tr = run_regret(mdp, 3000, rng);
    ASSERT_EQ(tr.episodes(), 3000u);
    const std::uint64_t bad = tr.counts()(spec.horizon, tree_reward_state(spec), 1);
    EXPECT_NEAR(tr.cumulative(3000), 0.2 * static_cast<double>(bad), 1e-9);
    for (std::uint64_t t = 1; t <= 3000; t += 37) {
        const double r = tr.regret(t);
        EXPECT_TRUE(std::abs(r) < 1e-12 || std::abs(r - 0.2) < 1e-12) << t;
    }
}

TEST(Ucbvi, SingleActionHasNoRegret) {
    const Mdp mdp = random_mdp(3, 1, 3, 0, true);
    Rng rng(1);
    const RegretTrace tr = run_regret(mdp, 200, rng);
    EXPECT_EQ(tr.cumulative(200), 0.0);
    EXPECT_EQ(tr.segments().size(), 1u);
}

TEST(Ucbvi, LogarithmicRegretOnTree) {
    const double gap = 0.2;
    const Mdp mdp = tree_mdp(tree(gap));
    const std::uint64_t T = 10000;
    const double bound = 8.0 / gap * std::log(2.0 * 8 * 3 * 4 * double(T) * double(T)) + 2.0 * gap;
    double mean_early = 0.0, mean_late = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed({77, seed}));
        const RegretTrace tr = run_regret(mdp, T, rng);
        EXPECT_LE(tr.cumulative(T), bound) << seed;
        mean_early += tr.average(100) / 20;
        mean_late += tr.average(T) / 20;
    }
    EXPECT_LT(mean_late, mean_early);
}

TEST(Ucbvi, TraceSegmentsAreConsistent) {
    const Mdp mdp = random_mdp(3, 2, 3, 3, true);
    Rng rng(9);
    const RegretTrace tr = run_regret(mdp, 500, rng);
    const double vstar = optimal_values(mdp).values.v(1, 0);
    double sum = 0.0;
    std::uint64_t covered = 0;
    for (const RegretSegment& seg : tr.segments()) {
        EXPECT_EQ(seg.first, covered + 1);
        covered += seg.length;
        const DeterministicPolicy& pi = tr.policies()[seg.policy];
        EXPECT_NEAR(seg.regret, vstar - evaluate_policy(mdp, pi).v(1, 0), 1e-12);
        sum += seg.regret * static_cast<double>(seg.length);
    }
    EXPECT_EQ(covered, 500u);
    EXPECT_NEAR(tr.cumulative(500), sum, 1e-9);
    EXPECT_NEAR(tr.cumulative(1), tr.regret(1), 1e-15);
    EXPECT_TRUE(tr.policy(1) == first_available_policy(mdp));
    std::uint64_t total = 0;
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) total += tr.counts()(2, s, a);
    EXPECT_EQ(total, 500u);
}

TEST(Ucbvi, RegretToPacSamplesPlayedPolicies) {
    const Mdp mdp = tree_mdp(tree(0.2));
    Rng rng(2);
    const RegretTrace tr = run_regret(mdp, 400, rng);
    Rng pick(3);
    for (int k = 0; k < 50; ++k) {
        const DeterministicPolicy pi = regret_to_pac_sample(tr, pick);
        bool found = false;
        for (const auto& p : tr.policies()) found = found || p == pi;
        EXPECT_TRUE(found);
    }
    Rng draws(4);
    const double frac = eps_bad_fraction(tr, 0.1, 200000, draws);
    EXPECT_NEAR(frac, tr.cumulative(400) / (0.2 * 400), 0.01);
    EXPECT_THROW(regret_to_pac_sample(RegretTrace{}, pick), ConfigError);
}

TEST(Ucbvi, EpsBadFractionAtMeasuredHorizon) {
    const double gap = 0.3, eps = 0.2, delta = 0.1;
    const Mdp mdp = tree_mdp(tree(gap));
    const std::uint64_t seeds = 50, master = 0xabc;
    const TEpsilonResult te = measure_t_epsilon(mdp, eps, delta, 20000, seeds, master);
    ASSERT_TRUE(te.sustained.has_value());
    const std::uint64_t T = *te.sustained;
    EXPECT_LE(te.mean_average(T), eps * delta);
    double frac = 0.0, mean = 0.0;
    for (std::uint64_t k = 0; k < seeds; ++k) {
        Rng rng(derive_seed({master, k}));
        const RegretTrace tr = run_regret(mdp, T, rng);
        mean += tr.cumulative(T) / seeds;
        Rng draws(k);
        frac += eps_bad_fraction(tr, eps, 2000, draws) / seeds;
    }
    EXPECT_NEAR(mean, te.mean_cumulative[T - 1], 1e-9 * (1 + mean));
    EXPECT_LE(frac, 0.15);
}

TEST(Ucbvi, IndependentOfJobs) {
    const Mdp mdp = tree_mdp(tree(0.2));
    const TEpsilonResult a = measure_t_epsilon(mdp, 0.2, 0.1, 2000, 6, 1, 1);
    const TEpsilonResult b = measure_t_epsilon(mdp, 0.2, 0.1, 2000, 6, 1, 3);
    EXPECT_EQ(a.mean_cumulative, b.mean_cumulative);
    EXPECT_EQ(a.sustained, b.sustained);
}

TEST(Ucbvi, CurveCrossings) {
    // Average regret 1, 0.5, 1/3, 0.25, 0.4: above 0.3 at T = 5 again.
    const TEpsilonResult r = t_epsilon_from_curve({1, 1, 1, 1, 2}, 3, 0.3, 1.0);
    EXPECT_EQ(r.first_crossing, 4u);
    EXPECT_EQ(r.last_above, 5u);
    EXPECT_FALSE(r.sustained.has_value());
    const TEpsilonResult s = t_epsilon_from_curve({1, 1, 1, 1, 1}, 3, 0.3, 1.0);
    EXPECT_EQ(s.sustained, 4u);
    EXPECT_DOUBLE_EQ(s.threshold, 0.3);
}
