#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "optpac/bounds.hpp"
#include "optpac/bpi_ucrl.hpp"
#include "optpac/errors.hpp"
#include "optpac/instances.hpp"
#include "optpac/oracles.hpp"

using namespace optpac;

namespace {

// Two states, two actions; action 1 of state 0 pays 1 and stays, everything
// else pays 0.2 and moves to the other state.
Mdp two_state_chain(int horizon) {
    MdpBuilder b(2, 2, horizon);
    for (int h = 1; h <= horizon; ++h)
        for (int s = 0; s < 2; ++s) {
            b.set_deterministic(h, s, 0, 1 - s);
            b.set_reward(h, s, 0, RewardModel::fixed(0.2));
            b.set_deterministic(h, s, 1, s == 0 ? 0 : 1 - s);
            b.set_reward(h, s, 1, RewardModel::fixed(s == 0 ? 1.0 : 0.2));
        }
    return b.build();
}

}  // namespace

// Reference values computed independently in 50-digit arithmetic.
TEST(Thresholds, FrozenValues) {
    EXPECT_NEAR(threshold_beta_r(10, 0.1, 2, 2, 2), 4.439267098070181, 1e-12);
    EXPECT_NEAR(threshold_beta_p(10, 0.1, 2, 2, 2), 8.878534196140362, 1e-12);
    EXPECT_NEAR(threshold_beta(10, 0.1, 2, 2, 2), 39.95340388263163, 1e-11);
}

TEST(Thresholds, SingleStateDropsDimensionTerm) {
    EXPECT_DOUBLE_EQ(threshold_beta_p(1000, 0.1, 1, 2, 2), log_confidence(1, 2, 2, 0.1));
}

TEST(Thresholds, DomainErrors) {
    EXPECT_THROW(threshold_beta(-1, 0.1, 2, 2, 2), std::domain_error);
    EXPECT_THROW(threshold_beta(1, 0.0, 2, 2, 2), std::domain_error);
    EXPECT_THROW(threshold_beta(1, 1.0, 2, 2, 2), std::domain_error);
}

TEST(Bonus, FrozenValues) {
    EXPECT_DOUBLE_EQ(bonus_value(BonusRule::Stochastic, 5, 1, 3, 2, 3, 0.1, 5), 3.0);
    EXPECT_NEAR(bonus_value(BonusRule::Stochastic, 500, 2, 3, 2, 3, 0.1, 500), 0.7887582586415398, 1e-12);
    EXPECT_NEAR(bonus_value(BonusRule::Deterministic, 50, 1, 3, 2, 3, 0.1, 50), 0.3350133545440039, 1e-12);
    EXPECT_DOUBLE_EQ(bonus_value(BonusRule::Ucbvi, 4, 4, 8, 3, 4, 0.1, 10, true), 1.0);
    EXPECT_NEAR(bonus_value(BonusRule::Ucbvi, 4, 4, 8, 3, 4, 0.1, 10, false), 2.220660437574357, 1e-12);
}

TEST(Bonus, UnvisitedIsFullRange) {
    for (BonusRule r : {BonusRule::Stochastic, BonusRule::Deterministic, BonusRule::Ucbvi})
        for (int h = 1; h <= 4; ++h) EXPECT_EQ(bonus_value(r, 0, h, 3, 2, 4, 0.1, 7), 4 - h + 1);
}

TEST(Bonus, NonIncreasingInVisits) {
    for (BonusRule r : {BonusRule::Stochastic, BonusRule::Deterministic})
        for (int S : {2, 5, 10}) {
            double prev = kInf;
            for (std::uint64_t n = 1; n < 200000; n = n * 5 / 4 + 1) {
                const double b = bonus_value(r, n, 1, S, 3, 4, 0.05, n);
                EXPECT_LE(b, prev + 1e-15) << S << ' ' << n;
                prev = b;
            }
            EXPECT_LT(prev, 0.2);
        }
}

TEST(Bonus, RuleNames) {
    for (BonusRule r : {BonusRule::Stochastic, BonusRule::Deterministic, BonusRule::Ucbvi})
        EXPECT_EQ(parse_bonus_rule(to_string(r)), r);
    EXPECT_THROW(parse_bonus_rule("hoeffding"), ConfigError);
}

TEST(Kl, FrozenValueAndSupport) {
    const double p[] = {0.5, 0.5}, q[] = {0.25, 0.75};
    EXPECT_NEAR(kl_categorical(p, q), 0.1438410362258905, 1e-15);
    EXPECT_EQ(kl_categorical(p, p), 0.0);
    const double zero_p[] = {0.0, 1.0}, zero_q[] = {0.0, 1.0};
    EXPECT_EQ(kl_categorical(zero_p, zero_q), 0.0);
    const double r[] = {1.0, 0.0};
    EXPECT_THROW(kl_categorical(p, r), ConsistencyError);
}

TEST(Agent, InitialBoundsAreTrivial) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    AgentState st(mdp, BonusRule::Stochastic, 0.1);
    st.refresh();
    EXPECT_EQ(st.episodes(), 0u);
    EXPECT_DOUBLE_EQ(st.upper().v(1, 0), 3.0);
    EXPECT_DOUBLE_EQ(st.lower().v(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(st.stopping_gap(), 3.0);
    EXPECT_TRUE(st.sampling_rule() == first_available_policy(mdp));
}

TEST(Agent, UpdateCountsAndEstimates) {
    const Mdp mdp = two_state_chain(3);
    AgentState st(mdp, BonusRule::Deterministic, 0.1);
    st.refresh();
    Rng rng(0);
    DeterministicPolicy pi(2, 3, 1);
    for (int k = 0; k < 5; ++k) {
        st.update(sample_episode(mdp, pi, rng));
        EXPECT_EQ(st.touched().size(), 3u);
    }
    st.refresh();
    EXPECT_EQ(st.episodes(), 5u);
    for (int h = 1; h <= 3; ++h) {
        EXPECT_EQ(st.count(h, 0, 1), 5u);
        EXPECT_EQ(st.count(h, 0, 0), 0u);
        EXPECT_EQ(st.transition_count(h, 0, 1, 0), 5u);
        EXPECT_DOUBLE_EQ(st.r_hat(h, 0, 1), 1.0);
        EXPECT_DOUBLE_EQ(st.reward_sum(h, 0, 1), 5.0);
        EXPECT_EQ(st.p_hat(h, 0, 1)[0], 1.0);
        EXPECT_DOUBLE_EQ(st.bonus(h, 0, 1), bonus_value(BonusRule::Deterministic, 5, h, 2, 2, 3, 0.1, 5));
        EXPECT_DOUBLE_EQ(st.bonus(h, 0, 1), st.compute_bonus(h, 0, 1));
        EXPECT_EQ(st.bonus(h, 0, 0), 3 - h + 1);
    }
    // Unvisited action keeps the full-range bonus and stays greedy.
    EXPECT_EQ(st.sampling_rule()(1, 0), 0);
    EXPECT_EQ(st.recommend()(1, 0), 1);
}

TEST(Agent, FiveEpisodeTrace) {
    // One state, two actions with fixed rewards 1 and 0, H = 1: the greedy
    // rule alternates until both upper bounds are computed from data.
    MdpBuilder b(1, 2, 1);
    b.set_reward(1, 0, 0, RewardModel::fixed(1.0));
    b.set_reward(1, 0, 1, RewardModel::fixed(0.0));
    const Mdp mdp = b.build();
    AgentState st(mdp, BonusRule::Deterministic, 0.1);
    st.refresh();
    Rng rng(0);
    std::vector<int> played;
    for (int k = 0; k < 5; ++k) {
        const int a = st.sampling_rule()(1, 0);
        played.push_back(a);
        DeterministicPolicy pi(1, 1, a);
        st.update(sample_episode(mdp, pi, rng));
        st.refresh();
    }
    // Upper bounds are capped at 1, so action 0 (upper 1) ties with the
    // unvisited action 1 (upper 1) and wins on index.
    EXPECT_EQ(played, (std::vector<int>{0, 0, 0, 0, 0}));
    const double b5 = bonus_value(BonusRule::Deterministic, 5, 1, 1, 2, 1, 0.1, 5);
    EXPECT_DOUBLE_EQ(st.lower().q(1, 0, 0), std::max(0.0, 1.0 - b5));
    EXPECT_DOUBLE_EQ(st.stopping_gap(), 1.0 - std::max(0.0, 1.0 - b5));
}

TEST(Agent, InjectedExactEstimates) {
    const Mdp mdp = random_mdp(3, 2, 3, 4, true);
    const auto opt = optimal_values(mdp);
    AgentState st(mdp, BonusRule::Stochastic, 0.1);
    st.inject_estimates(mdp, 100000000ULL);
    EXPECT_LT(st.stopping_gap(), 0.05);
    EXPECT_NEAR(evaluate_policy(mdp, st.recommend()).v(1, 0), opt.values.v(1, 0), 0.05);
    for (int h = 1; h <= 3; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) {
                EXPECT_LE(st.lower().q(h, s, a), opt.values.q(h, s, a) + 1e-12);
                EXPECT_GE(st.upper().q(h, s, a), opt.values.q(h, s, a) - 1e-12);
            }
    AgentState empty(mdp, BonusRule::Stochastic, 0.1);
    empty.inject_estimates(mdp, 0);
    EXPECT_DOUBLE_EQ(empty.stopping_gap(), 3.0);
}

TEST(Agent, PolicyBoundsSandwich) {
    const Mdp mdp = random_mdp(3, 2, 3, 6, true);
    AgentState st(mdp, BonusRule::Stochastic, 0.1);
    st.inject_estimates(mdp, 2000);
    for (const auto& pi : enumerate_policies(mdp, {})) {
        const PolicyBounds pb = policy_confidence_bounds(st, pi);
        const double v = evaluate_policy(mdp, pi).v(1, 0);
        EXPECT_LE(pb.lower.v(1, 0), v + 1e-12);
        EXPECT_GE(pb.upper.v(1, 0), v - 1e-12);
        EXPECT_LE(pb.upper.v(1, 0), st.upper().v(1, 0) + 1e-12);
        EXPECT_LE(pb.lower.v(1, 0), st.lower().v(1, 0) + 1e-12);
    }
    const PolicyBounds greedy = policy_confidence_bounds(st, st.sampling_rule());
    EXPECT_NEAR(greedy.upper.v(1, 0), st.upper().v(1, 0), 1e-12);
    const PolicyBounds rec = policy_confidence_bounds(st, st.recommend());
    EXPECT_NEAR(rec.lower.v(1, 0), st.lower().v(1, 0), 1e-12);
}

TEST(Targeting, FirstEpisodeTargetsInitialPair) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    AgentState st(mdp, BonusRule::Stochastic, 0.1);
    st.refresh();
    const auto vis = visitation_probabilities(mdp, st.sampling_rule());
    const auto targets = targeted_set(st, vis);
    ASSERT_EQ(targets.size(), 1u);
    EXPECT_EQ(targets[0], (Triplet{1, 0, 0}));
}

TEST(Targeting, TiesAreAllCounted) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    AgentState st(mdp, BonusRule::Deterministic, 0.1);
    st.inject_estimates(mdp, 10);
    const auto vis = visitation_probabilities(mdp, first_available_policy(mdp));
    std::size_t visited = 0;
    for (int h = 1; h <= 3; ++h)
        for (int s = 0; s < 3; ++s)
            if (vis.pair(h, s, 0) > kPositiveMass) ++visited;
    EXPECT_EQ(targeted_set(st, vis).size(), visited);
}

TEST(Pigeonhole, BoundedByTwoRootRatio) {
    for (double p : {1.0, 0.5, 0.3, 0.01})
        for (std::uint64_t z : {0u, 1u, 2u, 10u, 99u, 1000u, 12345u})
            EXPECT_LE(pigeonhole_sum(z, p), 2.0 * std::sqrt(z / p) + 1e-12) << p << ' ' << z;
    EXPECT_DOUBLE_EQ(pigeonhole_sum(3, 1.0), 1.0 + 1.0 + 1.0 / std::sqrt(2.0));
}

TEST(Run, StopsImmediatelyWhenEpsilonCoversRange) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    Rng rng(1);
    const RunResult r = run(mdp, 3.0, 0.1, {}, rng);
    EXPECT_EQ(r.tau, 1u);
    EXPECT_TRUE(r.success);
    EXPECT_FALSE(r.truncated);
}

TEST(Run, SingleActionIsAlwaysCorrect) {
    const Mdp mdp = random_mdp(3, 1, 3, 0, true);
    Rng rng(2);
    RunConfig cfg;
    cfg.max_episodes = 50;
    const RunResult r = run(mdp, 0.1, 0.1, cfg, rng);
    EXPECT_TRUE(r.success);
    EXPECT_DOUBLE_EQ(r.value_of_recommendation, r.optimal_value);
}

TEST(Run, RejectsUnsupportedInputs) {
    TreeSpec spec;
    Rng rng(0);
    EXPECT_THROW(run(tree_mdp(spec), 0.1, 0.1, {}, rng), ConfigError);
    const Mdp mdp = random_mdp(2, 2, 2, 0, true);
    RunConfig cfg;
    cfg.rule = BonusRule::Ucbvi;
    EXPECT_THROW(run(mdp, 0.1, 0.1, cfg, rng), ConfigError);
    EXPECT_THROW(run(mdp, 0.0, 0.1, {}, rng), ConfigError);
    EXPECT_THROW(run(mdp, 0.1, 1.0, {}, rng), ConfigError);
}

TEST(Run, TruncationIsReported) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    Rng rng(3);
    RunConfig cfg;
    cfg.max_episodes = 7;
    const RunResult r = run(mdp, 0.01, 0.1, cfg, rng);
    EXPECT_TRUE(r.truncated);
    EXPECT_EQ(r.tau, 7u);
}

TEST(Run, SeedDeterminesOutcome) {
    const Mdp mdp = two_state_chain(3);
    RunConfig cfg;
    cfg.rule = BonusRule::Deterministic;
    cfg.history = true;
    Rng a(11), b(11);
    const RunResult x = run(mdp, 0.1, 0.1, cfg, a);
    const RunResult y = run(mdp, 0.1, 0.1, cfg, b);
    EXPECT_EQ(x.tau, y.tau);
    ASSERT_EQ(x.history.size(), y.history.size());
    for (std::size_t i = 0; i < x.history.size(); ++i) EXPECT_EQ(x.history[i].policy_hash, y.history[i].policy_hash);
    EXPECT_EQ(x.history.size(), x.tau);
}

TEST(Run, DeterministicChainMostlySucceeds) {
    const Mdp mdp = two_state_chain(3);
    const RunOracles oracles = make_run_oracles(mdp);
    RunConfig cfg;
    cfg.rule = BonusRule::Deterministic;
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed({seed}));
        successes += run(mdp, 0.1, 0.1, cfg, rng, &oracles).success;
    }
    EXPECT_GE(successes, 90);
}

TEST(Run, DiagnosticsInvariants) {
    const Mdp mdp = random_mdp(3, 2, 2, 1, false);
    const RunOracles oracles = make_run_oracles(mdp);
    const GapReport& gaps = *oracles.gaps;
    RunConfig cfg;
    cfg.diagnostics = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const RunResult r = run(mdp, 0.2, 0.1, cfg, rng, &oracles);
        ASSERT_FALSE(r.truncated);
        EXPECT_GE(r.targeted_total() + 1, r.tau);
        EXPECT_EQ(r.lemmas.episodes, r.tau);
        EXPECT_EQ(r.lemmas.empty_targets, 0u);
        EXPECT_EQ(r.good_event.episodes_checked, r.tau);
        for (int h = 1; h <= 2; ++h) {
            double stage_mass = 0.0;
            for (int s = 0; s < 3; ++s)
                for (int a = 0; a < 2; ++a) {
                    stage_mass += r.pseudo(h, s, a);
                    EXPECT_LE(r.pseudo(h, s, a), static_cast<double>(r.tau) + 1e-9);
                }
            EXPECT_NEAR(stage_mass, static_cast<double>(r.tau), 1e-9);
        }
        if (!r.good_event.holds()) continue;
        EXPECT_EQ(r.lemmas.stopping_gap_failures, 0u) << r.lemmas.first_failure;
        EXPECT_EQ(r.lemmas.value_gap_failures, 0u) << r.lemmas.first_failure;
        EXPECT_EQ(r.lemmas.optimism_failures, 0u) << r.lemmas.first_failure;
        const std::uint64_t T = r.tau - 1;
        const int H = mdp.horizon();
        for (int h = 1; h <= H; ++h)
            for (int s = 0; s < 3; ++s)
                for (int a = 0; a < 2; ++a) {
                    if (!gaps.reachable(h, s, a)) {
                        EXPECT_EQ(r.targeted(h, s, a), 0u);
                        continue;
                    }
                    const double z = static_cast<double>(r.targeted(h, s, a));
                    const double cond = gaps.cond_return_gap(h, s, a);
                    const double pmin = gaps.p_min(h, s, a);
                    if (cond > 0.0) {
                        EXPECT_LE(z, 64.0 * std::pow(H, 4) * threshold_beta(T, 0.1, 3, 2, H) / (pmin * cond * cond));
                    }
                    EXPECT_LE(z, targeting_bound(gaps, h, s, a, T, 0.1, 0.2));
                }
    }
}

TEST(GoodEvent, HoldsBeforeAnyData) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    AgentState st(mdp, BonusRule::Stochastic, 0.1);
    st.refresh();
    const GoodEventStatus g = good_event_check(st, mdp, PseudoCounts(3, 2, 3));
    EXPECT_TRUE(g.holds());
    EXPECT_FALSE(g.first.has_value());
}

TEST(GoodEvent, CountViolationIsReported) {
    const Mdp mdp = random_mdp(3, 2, 3, 0, true);
    AgentState st(mdp, BonusRule::Stochastic, 0.1);
    st.refresh();
    PseudoCounts pseudo(3, 2, 3);
    VisitationTable vis = visitation_probabilities(mdp, first_available_policy(mdp));
    pseudo.add(vis, 3, 2, 3, 1000.0);
    const GoodEventStatus g = good_event_check(st, mdp, pseudo);
    EXPECT_FALSE(g.count);
    ASSERT_TRUE(g.first.has_value());
    EXPECT_EQ(g.first->part, GoodEventPart::Count);
    EXPECT_EQ(g.first->where, (Triplet{1, 0, 0}));

    GoodEventLog log;
    log.record(4, g);
    log.record(5, GoodEventStatus{});
    EXPECT_EQ(log.episodes_checked, 2u);
    EXPECT_EQ(log.count_failures, 1u);
    EXPECT_EQ(log.first->episode, 4u);
    EXPECT_FALSE(log.holds());
}
