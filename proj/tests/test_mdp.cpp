#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "optpac/errors.hpp"
#include "optpac/instances.hpp"
#include "optpac/kernels.hpp"
#include "optpac/mdp.hpp"
#include "optpac/mdp_io.hpp"
#include "optpac/oracles.hpp"

using namespace optpac;

namespace {

Mdp unit_reward_single_state() {
    MdpBuilder b(1, 1, 2);
    b.set_reward(1, 0, 0, RewardModel::fixed(1.0));
    b.set_reward(2, 0, 0, RewardModel::fixed(1.0));
    return b.build();
}

DeterministicPolicy random_policy(const Mdp& mdp, Rng& rng) {
    DeterministicPolicy pi(mdp.num_states(), mdp.horizon());
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s) {
            const auto acts = mdp.actions(h, s);
            pi.set(h, s, acts[rng() % acts.size()]);
        }
    return pi;
}

}  // namespace

TEST(Evaluate, UnitRewardsSumOverHorizon) {
    const Mdp mdp = unit_reward_single_state();
    EXPECT_DOUBLE_EQ(evaluate_policy(mdp, first_available_policy(mdp)).v(1, 0), 2.0);
}

TEST(Evaluate, TreeCollectsOnlyTheRewardedAction) {
    TreeSpec spec;
    spec.delta = 0.5;
    const Mdp mdp = tree_mdp(spec);
    DeterministicPolicy pi = first_available_policy(mdp);
    const int goal = tree_reward_state(spec);
    EXPECT_DOUBLE_EQ(evaluate_policy(mdp, pi).v(1, 0), 0.5);
    pi.set(spec.horizon, goal, 1);
    EXPECT_DOUBLE_EQ(evaluate_policy(mdp, pi).v(1, 0), 0.0);
}

TEST(Evaluate, RejectsUnavailableAction) {
    TreeSpec spec;
    const Mdp mdp = tree_mdp(spec);
    DeterministicPolicy pi = first_available_policy(mdp);
    pi.set(spec.horizon, tree_reward_state(spec), 2);
    try {
        evaluate_policy(mdp, pi);
        FAIL() << "expected ModelError";
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("h=4"), std::string::npos) << e.what();
    }
}

TEST(Optimal, DominatesRandomPolicies) {
    const Mdp mdp = random_mdp(4, 3, 3, 11, true);
    const double vstar = optimal_values(mdp).values.v(1, 0);
    Rng rng(3);
    for (int k = 0; k < 100; ++k) EXPECT_GE(vstar + 1e-12, evaluate_policy(mdp, random_policy(mdp, rng)).v(1, 0));
}

TEST(Optimal, EqualsBestEnumeratedPolicy) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Mdp mdp = random_mdp(3, 2, 3, seed, seed % 2 == 0);
        double best = -1.0;
        for (const auto& pi : enumerate_policies(mdp, {})) best = std::max(best, evaluate_policy(mdp, pi).v(1, 0));
        EXPECT_NEAR(optimal_values(mdp).values.v(1, 0), best, 1e-12);
    }
}

TEST(Optimal, TreeValueIsGap) {
    TreeSpec spec;
    spec.delta = 0.3;
    EXPECT_DOUBLE_EQ(optimal_values(tree_mdp(spec)).values.v(1, 0), 0.3);
}

TEST(Optimal, TiesGoToLowestAction) {
    MdpBuilder b(1, 3, 1);
    b.set_reward(1, 0, 1, RewardModel::fixed(0.5));
    b.set_reward(1, 0, 2, RewardModel::fixed(0.5));
    EXPECT_EQ(optimal_values(b.build()).policy(1, 0), 1);
}

TEST(Bellman, ResidualVanishes) {
    const Mdp mdp = random_mdp(4, 3, 4, 5, true);
    const auto sol = optimal_values(mdp);
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s)
            for (int a = 0; a < mdp.num_actions(); ++a) {
                double q = mdp.mean_reward(h, s, a);
                const auto p = mdp.transition(h, s, a);
                for (int n = 0; n < mdp.num_states(); ++n) q += p[n] * sol.values.v(h + 1, n);
                EXPECT_NEAR(sol.values.q(h, s, a), q, 1e-9);
                EXPECT_LE(sol.values.q(h, s, a), sol.values.v(h, s) + 1e-12);
            }
    for (int s = 0; s < mdp.num_states(); ++s) EXPECT_EQ(sol.values.v(mdp.horizon() + 1, s), 0.0);
}

TEST(Bellman, ScalarAndSimdBackendsAgree) {
    const Mdp mdp = random_mdp(13, 3, 4, 8, true);
    const kernels::Backend before = kernels::active_backend();
    kernels::select_backend(kernels::Backend::Scalar);
    const auto ref = optimal_values(mdp);
    const auto vis_ref = visitation_probabilities(mdp, ref.policy);
    kernels::select_backend(before);
    const auto sol = optimal_values(mdp);
    const auto vis = visitation_probabilities(mdp, ref.policy);
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s) {
            EXPECT_NEAR(ref.values.v(h, s), sol.values.v(h, s), 1e-12);
            EXPECT_NEAR(vis_ref.state(h, s), vis.state(h, s), 1e-12);
        }
}

TEST(Bellman, DeterministicShortfallIsSumOfGapsAlongPath) {
    const Mdp mdp = random_mdp(4, 3, 4, 21, false);
    const GapTable gaps = value_gaps(mdp);
    const auto vstar = optimal_values(mdp).values;
    Rng rng(9);
    for (int k = 0; k < 20; ++k) {
        const auto pi = random_policy(mdp, rng);
        const auto v = evaluate_policy(mdp, pi);
        for (int h0 = 1; h0 <= mdp.horizon(); ++h0)
            for (int s0 = 0; s0 < mdp.num_states(); ++s0) {
                double sum = 0.0;
                int s = s0;
                for (int h = h0; h <= mdp.horizon(); ++h) {
                    const int a = pi(h, s);
                    sum += gaps(h, s, a);
                    const auto p = mdp.transition(h, s, a);
                    s = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
                }
                EXPECT_NEAR(vstar.v(h0, s0) - v.v(h0, s0), sum, 1e-9);
            }
    }
}

TEST(Visitation, MassIsConservedAndPairsFollowPolicy) {
    const Mdp mdp = random_mdp(4, 2, 4, 2, true);
    Rng rng(1);
    const auto pi = random_policy(mdp, rng);
    const auto vis = visitation_probabilities(mdp, pi);
    for (int h = 1; h <= mdp.horizon(); ++h) {
        double total = 0.0;
        for (int s = 0; s < mdp.num_states(); ++s) {
            total += vis.state(h, s);
            for (int a = 0; a < mdp.num_actions(); ++a)
                EXPECT_EQ(vis.pair(h, s, a), a == pi(h, s) ? vis.state(h, s) : 0.0);
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Visitation, DeterministicChainIsZeroOne) {
    const Mdp mdp = random_mdp(5, 2, 4, 4, false);
    const auto vis = visitation_probabilities(mdp, first_available_policy(mdp));
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s) EXPECT_TRUE(vis.state(h, s) == 0.0 || vis.state(h, s) == 1.0);
}

TEST(Visitation, ConditionalConsistency) {
    const Mdp mdp = random_mdp(3, 2, 4, 6, true);
    Rng rng(4);
    const auto pi = random_policy(mdp, rng);
    const auto vis = visitation_probabilities(mdp, pi);
    const int S = mdp.num_states();
    for (int h = 1; h <= mdp.horizon(); ++h) {
        std::vector<VisitationTable> cond;
        for (int s = 0; s < S; ++s) cond.push_back(visitation_probabilities(mdp, pi, StageState{h, s}));
        for (int l = h; l <= mdp.horizon(); ++l)
            for (int sp = 0; sp < S; ++sp) {
                double mix = 0.0;
                for (int s = 0; s < S; ++s) mix += vis.state(h, s) * cond[s].state(l, sp);
                EXPECT_NEAR(vis.state(l, sp), mix, 1e-12);
            }
        for (int l = 1; l < h; ++l) EXPECT_EQ(cond[0].state(l, 0), 0.0);
    }
}

TEST(Sampling, DeterministicModelIgnoresSeed) {
    MdpBuilder b(2, 1, 3);
    for (int h = 1; h <= 3; ++h)
        for (int s = 0; s < 2; ++s) {
            b.set_deterministic(h, s, 0, 1 - s);
            b.set_reward(h, s, 0, RewardModel::fixed(0.25 * (s + 1)));
        }
    const Mdp mdp = b.build();
    Rng r1(1), r2(999);
    EXPECT_EQ(sample_episode(mdp, first_available_policy(mdp), r1),
              sample_episode(mdp, first_available_policy(mdp), r2));
}

TEST(Sampling, SameSeedSameTrajectory) {
    const Mdp mdp = random_mdp(4, 2, 5, 3, true);
    Rng r1(42), r2(42);
    for (int k = 0; k < 50; ++k)
        EXPECT_EQ(sample_episode(mdp, first_available_policy(mdp), r1),
                  sample_episode(mdp, first_available_policy(mdp), r2));
}

TEST(Sampling, BernoulliMeanConverges) {
    MdpBuilder b(1, 1, 1);
    b.set_reward(1, 0, 0, RewardModel::bernoulli(0.3));
    const Mdp mdp = b.build();
    Rng rng(5);
    Trajectory t;
    double sum = 0.0;
    for (int k = 0; k < 100000; ++k) {
        sample_episode(mdp, first_available_policy(mdp), rng, t);
        sum += t.rewards[0];
    }
    EXPECT_NEAR(sum / 1e5, 0.3, 0.01);
}

TEST(Builder, ReportsFirstViolation) {
    {
        MdpBuilder b(2, 2, 2);
        const double row[] = {0.5, 0.4};
        b.set_transition(2, 1, 0, row);
        try {
            b.build();
            FAIL();
        } catch (const ModelError& e) {
            const std::string msg = e.what();
            EXPECT_NE(msg.find("h=2"), std::string::npos) << msg;
            EXPECT_NE(msg.find("s=1"), std::string::npos) << msg;
        }
    }
    {
        MdpBuilder b(1, 1, 1);
        b.set_reward(1, 0, 0, RewardModel::bernoulli(1.5));
        EXPECT_THROW(b.build(), ModelError);
    }
    {
        MdpBuilder b(1, 2, 1);
        b.set_available(1, 0, 0, false);
        b.set_available(1, 0, 1, false);
        EXPECT_THROW(b.build(), ModelError);
    }
    {
        MdpBuilder b(2, 1, 1);
        const double row[] = {0.5 + 4e-10, 0.5};
        b.set_transition(1, 0, 0, row);
        const Mdp m = b.build();
        EXPECT_NEAR(m.transition(1, 0, 0)[0] + m.transition(1, 0, 0)[1], 1.0, 1e-15);
    }
}

TEST(ModelFile, RoundTrip) {
    TreeSpec spec;
    spec.bernoulli = false;
    for (const Mdp& m : {random_mdp(3, 2, 3, 0, true), tree_mdp(spec)}) {
        const Mdp back = parse_mdp(serialize_mdp(m));
        EXPECT_TRUE(back == m);
        EXPECT_EQ(serialize_mdp(back), serialize_mdp(m));
    }
}

TEST(ModelFile, RejectsMalformed) {
    EXPECT_THROW(parse_mdp("{"), ModelError);
    EXPECT_THROW(parse_mdp(R"({"S":1,"A":1,"H":1,"transitions":[[[[0.5]]]],"rewards":[[[{"kind":"fixed","mean":0}]]]})"),
                 ModelError);
    EXPECT_NO_THROW(parse_mdp(R"({"S":1,"A":1,"H":1,"transitions":[[[[1]]]],"rewards":[[[{"kind":"fixed","mean":0}]]]})"));
}
