#pragma once

// Time-inhomogeneous tabular episodic MDPs, deterministic policies, exact
// backward/forward induction, and seeded trajectory sampling.
//
// Stages are 1-based (1..H) everywhere in the public interface. Value tables
// carry an explicit stage H+1 row fixed at zero.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "optpac/rng.hpp"

namespace optpac {

inline constexpr double kProbabilityTolerance = 1e-9;
// Visitation masses at or below this are treated as zero.
inline constexpr double kPositiveMass = 1e-12;

enum class RewardKind { Bernoulli, Fixed, Gaussian };

struct RewardModel {
    RewardKind kind = RewardKind::Fixed;
    double mean = 0.0;
    double variance = 0.0;  // gaussian only

    static RewardModel bernoulli(double mean) { return {RewardKind::Bernoulli, mean, 0.0}; }
    static RewardModel fixed(double mean) { return {RewardKind::Fixed, mean, 0.0}; }
    static RewardModel gaussian(double mean, double variance) {
        return {RewardKind::Gaussian, mean, variance};
    }
    bool bounded() const { return kind != RewardKind::Gaussian; }
    double sample(Rng& rng) const;

    friend bool operator==(const RewardModel&, const RewardModel&) = default;
};

struct Triplet {
    int h = 1;
    int s = 0;
    int a = 0;
    friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

class Mdp;

/// Mutable construction front-end; build() validates and freezes.
class MdpBuilder {
public:
    /// All actions available, self-loop transitions, fixed zero rewards.
    MdpBuilder(int num_states, int num_actions, int horizon, int initial_state = 0);

    MdpBuilder& set_available(int h, int s, int a, bool available);
    MdpBuilder& set_actions(int h, int s, std::span<const int> actions);
    MdpBuilder& set_transition(int h, int s, int a, std::span<const double> next);
    MdpBuilder& set_deterministic(int h, int s, int a, int next_state);
    MdpBuilder& set_reward(int h, int s, int a, RewardModel model);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int horizon() const { return H_; }
    bool available(int h, int s, int a) const {
        check_coords(h, s, a);
        return mask_[triplet(h, s, a)] != 0;
    }

    /// Validates every invariant (first violation reported with coordinates),
    /// renormalizes rows that are stochastic within tolerance.
    Mdp build() const;

private:
    friend class Mdp;
    std::size_t triplet(int h, int s, int a) const;
    void check_coords(int h, int s, int a) const;

    int S_, A_, H_, s1_;
    std::vector<std::uint8_t> mask_;
    std::vector<double> p_;
    std::vector<RewardModel> rewards_;
};

class Mdp {
public:
    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int horizon() const { return H_; }
    int initial_state() const { return s1_; }

    bool available(int h, int s, int a) const { return mask_[triplet(h, s, a)] != 0; }
    std::span<const int> actions(int h, int s) const;
    int first_action(int h, int s) const { return actions(h, s).front(); }

    std::span<const double> transition(int h, int s, int a) const {
        return {p_.data() + triplet(h, s, a) * static_cast<std::size_t>(S_),
                static_cast<std::size_t>(S_)};
    }
    const RewardModel& reward(int h, int s, int a) const { return rewards_[triplet(h, s, a)]; }
    double mean_reward(int h, int s, int a) const { return means_[triplet(h, s, a)]; }

    bool deterministic_transitions() const { return deterministic_; }
    bool bounded_rewards() const { return bounded_; }

    int sample_next(int h, int s, int a, Rng& rng) const;

    std::size_t num_triplets() const { return static_cast<std::size_t>(H_) * S_ * A_; }
    std::size_t triplet(int h, int s, int a) const {
        return (static_cast<std::size_t>(h - 1) * S_ + s) * A_ + a;
    }
    std::size_t cell(int h, int s) const { return static_cast<std::size_t>(h - 1) * S_ + s; }

    /// (h, s) cells reachable at stage h by some policy (support graph search).
    const std::vector<std::uint8_t>& reachable_cells() const { return reachable_; }
    bool reachable(int h, int s) const { return reachable_[cell(h, s)] != 0; }

    /// Triplets (h, s, a) with a available, in lexicographic order.
    std::vector<Triplet> available_triplets() const;

    friend bool operator==(const Mdp& x, const Mdp& y);

private:
    friend class MdpBuilder;
    Mdp() = default;

    int S_ = 0, A_ = 0, H_ = 0, s1_ = 0;
    std::vector<std::uint8_t> mask_;
    std::vector<int> action_list_;              // flattened available actions per cell
    std::vector<std::uint32_t> action_offset_;  // size H*S + 1
    std::vector<double> p_;
    std::vector<double> cdf_;
    std::vector<RewardModel> rewards_;
    std::vector<double> means_;
    std::vector<std::uint8_t> reachable_;
    bool deterministic_ = true;
    bool bounded_ = true;
};

/// Stage-indexed state -> action table.
class DeterministicPolicy {
public:
    DeterministicPolicy() = default;
    DeterministicPolicy(int num_states, int horizon, int fill = 0);

    int operator()(int h, int s) const { return act_[idx(h, s)]; }
    void set(int h, int s, int a) { act_[idx(h, s)] = a; }
    int num_states() const { return S_; }
    int horizon() const { return H_; }
    std::span<const int> raw() const { return act_; }
    std::uint64_t hash() const;

    friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

private:
    std::size_t idx(int h, int s) const { return static_cast<std::size_t>(h - 1) * S_ + s; }
    int S_ = 0, H_ = 0;
    std::vector<int> act_;
};

/// Lowest available action in every cell.
DeterministicPolicy first_available_policy(const Mdp& mdp);

/// Throws ModelError naming the first (h, s) whose action is unavailable.
void validate_policy(const Mdp& mdp, const DeterministicPolicy& pi);

/// Q and V per stage; stage H+1 rows are zero. Q of an unavailable action is
/// -infinity.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(int num_states, int num_actions, int horizon);

    double q(int h, int s, int a) const { return q_[qidx(h, s, a)]; }
    double v(int h, int s) const { return v_[vidx(h, s)]; }
    double& q(int h, int s, int a) { return q_[qidx(h, s, a)]; }
    double& v(int h, int s) { return v_[vidx(h, s)]; }
    std::span<const double> v_row(int h) const {
        return {v_.data() + vidx(h, 0), static_cast<std::size_t>(S_)};
    }
    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int horizon() const { return H_; }

private:
    std::size_t qidx(int h, int s, int a) const {
        return (static_cast<std::size_t>(h - 1) * S_ + s) * A_ + a;
    }
    std::size_t vidx(int h, int s) const { return static_cast<std::size_t>(h - 1) * S_ + s; }
    int S_ = 0, A_ = 0, H_ = 0;
    std::vector<double> q_;
    std::vector<double> v_;
};

struct OptimalSolution {
    ValueTable values;
    DeterministicPolicy policy;  // greedy, ties to the lowest action index
};

/// Exact Q^pi, V^pi by backward induction on reward means.
ValueTable evaluate_policy(const Mdp& mdp, const DeterministicPolicy& pi);

/// Q*, V* and one greedy optimal policy.
OptimalSolution optimal_values(const Mdp& mdp);

struct StageState {
    int h = 1;
    int s = 0;
};

/// p_h^pi(s) and p_h^pi(s, a). For a conditional table started at (h0, s0),
/// stages before h0 are all zero.
class VisitationTable {
public:
    VisitationTable() = default;
    VisitationTable(int num_states, int num_actions, int horizon);

    double state(int h, int s) const { return state_[sidx(h, s)]; }
    double pair(int h, int s, int a) const { return pair_[pidx(h, s, a)]; }
    double& state(int h, int s) { return state_[sidx(h, s)]; }
    double& pair(int h, int s, int a) { return pair_[pidx(h, s, a)]; }
    std::span<const double> state_row(int h) const {
        return {state_.data() + sidx(h, 0), static_cast<std::size_t>(S_)};
    }
    std::span<double> state_row(int h) {
        return {state_.data() + sidx(h, 0), static_cast<std::size_t>(S_)};
    }
    int start_stage() const { return start_stage_; }
    void set_start_stage(int h) { start_stage_ = h; }

private:
    std::size_t sidx(int h, int s) const { return static_cast<std::size_t>(h - 1) * S_ + s; }
    std::size_t pidx(int h, int s, int a) const {
        return (static_cast<std::size_t>(h - 1) * S_ + s) * A_ + a;
    }
    int S_ = 0, A_ = 0, H_ = 0;
    int start_stage_ = 1;
    std::vector<double> state_;
    std::vector<double> pair_;
};

/// Forward induction. Unconditional when `from` is empty (mass 1 at
/// (s1, stage 1)); otherwise p_l^pi(. | s, h) for l >= h.
VisitationTable visitation_probabilities(const Mdp& mdp, const DeterministicPolicy& pi,
                                         std::optional<StageState> from = std::nullopt);

struct Trajectory {
    std::vector<int> states;      // s_1..s_H
    std::vector<int> actions;     // a_1..a_H
    std::vector<double> rewards;  // r_1..r_H
    int final_state = 0;          // s_{H+1}

    int horizon() const { return static_cast<int>(states.size()); }
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

Trajectory sample_episode(const Mdp& mdp, const DeterministicPolicy& pi, Rng& rng);
/// Allocation-free variant reusing `out`'s buffers.
void sample_episode(const Mdp& mdp, const DeterministicPolicy& pi, Rng& rng, Trajectory& out);

}  // namespace optpac
