#pragma once

// Optimistic best-policy identification: maximum-likelihood estimates,
// Hoeffding-style bonuses, upper/lower Q recursions, greedy sampling, the
// adaptive stopping rule and the pessimistic recommendation, together with
// the diagnostics used by the analysis (good event, pseudo-counts, targeting).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optpac/mdp.hpp"
#include "optpac/oracles.hpp"

namespace optpac {

/// log(3SAH/delta).
double log_confidence(int S, int A, int H, double delta);

/// 1/2 (log(3SAH/delta) + log(e(1+t))).
double threshold_beta_r(double t, double delta, int S, int A, int H);
/// log(3SAH/delta) + (S-1) log(e(1 + t/(S-1))); for S = 1 the second term is
/// its limit 0.
double threshold_beta_p(double t, double delta, int S, int A, int H);
/// (sqrt(beta_r) + sqrt(2 beta_p))^2.
double threshold_beta(double t, double delta, int S, int A, int H);

/// Same thresholds parameterized by L = log(3SAH/delta) directly; no domain
/// checks. Used with decreasing confidence schedules.
double beta_r_from_log(double t, double log_conf);
double beta_p_from_log(double t, double log_conf, int S);
double beta_from_log(double t, double log_conf, int S);

enum class BonusRule {
    // (H-h+1) (sqrt(beta(n)/n) ^ 1)
    Stochastic,
    // sqrt(beta_r(n)/n) ^ 1, for known-deterministic transitions
    Deterministic,
    // Stage-H reward bonus sqrt(2 log(2SAH t^2)/n) ^ 1; earlier stages use
    // the Stochastic rule with delta = 1/t^2. With unbounded (Gaussian)
    // rewards the stage-H bonus is not capped: r_hat + 1 can fall below the
    // true mean, and the arm would never be optimistic again.
    Ucbvi,
};

std::string to_string(BonusRule rule);
BonusRule parse_bonus_rule(const std::string& name);

/// Bonus for a triplet at stage h with n visits after t episodes. n = 0 gives
/// H-h+1 for every rule.
double bonus_value(BonusRule rule, std::uint64_t n, int h, int S, int A, int H, double delta,
                   std::uint64_t t, bool bounded_rewards = true);

/// Learner state. Holds only the structure of the model (dimensions, action
/// masks, initial state); every statistic comes from observed trajectories.
class AgentState {
public:
    AgentState(const Mdp& structure, BonusRule rule, double delta);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int horizon() const { return H_; }
    int initial_state() const { return s1_; }
    BonusRule rule() const { return rule_; }
    double delta() const { return delta_; }
    /// Number of completed episodes t.
    std::uint64_t episodes() const { return t_; }

    bool available(int h, int s, int a) const { return mask_[index(h, s, a)] != 0; }
    std::uint64_t count(int h, int s, int a) const { return n_[index(h, s, a)]; }
    double reward_sum(int h, int s, int a) const { return rsum_[index(h, s, a)]; }
    std::uint64_t transition_count(int h, int s, int a, int next) const {
        return ncount_[index(h, s, a) * S_ + next];
    }
    double r_hat(int h, int s, int a) const { return rhat_[index(h, s, a)]; }
    std::span<const double> p_hat(int h, int s, int a) const {
        return {phat_.data() + index(h, s, a) * S_, static_cast<std::size_t>(S_)};
    }
    /// b_h^t(s, a) as of the last refresh().
    double bonus(int h, int s, int a) const { return bonus_[index(h, s, a)]; }
    /// Fresh evaluation from the current count.
    double compute_bonus(int h, int s, int a) const;

    const ValueTable& upper() const { return upper_; }
    const ValueTable& lower() const { return lower_; }

    /// Adds one episode's data and marks the touched triplets. Call refresh()
    /// before reading bonuses or bounds.
    void update(const Trajectory& traj);
    /// Recomputes stale bonuses and runs the backward upper/lower sweep.
    void refresh();

    /// argmax_a upperQ, ties to the lowest index; maintained by refresh().
    const DeterministicPolicy& sampling_rule() const { return greedy_; }
    /// argmax_a lowerQ, ties to the lowest index.
    DeterministicPolicy recommend() const;
    /// max_a upperQ_1(s1, a) - max_a lowerQ_1(s1, a).
    double stopping_gap() const;
    bool stopping_check(double epsilon) const { return stopping_gap() <= epsilon; }

    /// Sets every available triplet to `n` visits with exact mean rewards and
    /// transitions of `truth`, then refreshes.
    void inject_estimates(const Mdp& truth, std::uint64_t n);

    /// Triplets touched by the most recent update().
    std::span<const std::size_t> touched() const { return touched_; }
    std::size_t index(int h, int s, int a) const {
        return (static_cast<std::size_t>(h - 1) * S_ + s) * A_ + a;
    }

private:
    void recompute_estimates(std::size_t i);

    int S_, A_, H_, s1_;
    BonusRule rule_;
    double delta_;
    bool bounded_;
    double log_conf_;
    std::uint64_t t_ = 0;
    std::uint64_t bonus_t_ = 0;  // episode count the bonuses were computed for
    std::vector<std::uint8_t> mask_;
    std::vector<std::uint64_t> n_;
    std::vector<double> rsum_;
    std::vector<std::uint64_t> ncount_;
    std::vector<double> rhat_;
    std::vector<double> phat_;
    std::vector<double> bonus_;
    std::vector<std::uint8_t> stale_;
    std::vector<std::size_t> touched_;
    std::vector<std::size_t> visited_;
    ValueTable upper_, lower_;
    DeterministicPolicy greedy_;
};

/// Per-policy bounds: as the optimal-value recursion but following pi.
struct PolicyBounds {
    ValueTable upper;
    ValueTable lower;
};
PolicyBounds policy_confidence_bounds(const AgentState& state, const DeterministicPolicy& pi);

/// nbar_h^t(s, a) = sum_{j <= t} p_h^{pi^j}(s, a).
class PseudoCounts {
public:
    PseudoCounts() = default;
    PseudoCounts(int S, int A, int H) : counts_(S, A, H, 0.0) {}
    void add(const VisitationTable& vis, int S, int A, int H, double weight = 1.0);
    double operator()(int h, int s, int a) const { return counts_(h, s, a); }
    const TripletArray<double>& table() const { return counts_; }

private:
    TripletArray<double> counts_;
};

enum class GoodEventPart { Reward, Transition, Count };
std::string to_string(GoodEventPart part);

struct GoodEventViolation {
    std::uint64_t episode = 0;
    GoodEventPart part = GoodEventPart::Reward;
    Triplet where;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Truth at one episode.
struct GoodEventStatus {
    bool reward = true;
    bool transition = true;
    bool count = true;
    std::optional<GoodEventViolation> first;
    bool holds() const { return reward && transition && count; }
};

/// KL(p || q) with 0 log(0/.) = 0; throws ConsistencyError where p > 0 = q.
double kl_categorical(std::span<const double> p, std::span<const double> q);

/// Evaluates E^r, E^p and E^c for every triplet at the state's current
/// episode. Reads the true model for diagnostics only.
GoodEventStatus good_event_check(const AgentState& state, const Mdp& mdp, const PseudoCounts& pseudo);

/// Episodes at which each part failed, and the first failure.
struct GoodEventLog {
    std::uint64_t episodes_checked = 0;
    std::uint64_t reward_failures = 0;
    std::uint64_t transition_failures = 0;
    std::uint64_t count_failures = 0;
    std::optional<GoodEventViolation> first;

    bool holds() const { return reward_failures == 0 && transition_failures == 0 && count_failures == 0; }
    void record(std::uint64_t episode, const GoodEventStatus& status);
};

/// Triplets with p_h^pi(s, a) > 0 whose bonus is maximal among them (ties
/// within 1e-12).
std::vector<Triplet> targeted_set(const AgentState& state, const VisitationTable& vis);

struct RunConfig {
    BonusRule rule = BonusRule::Stochastic;
    // Good event, pseudo-counts and (with lemma_checks) targeting counts and
    // the per-episode analysis inequalities. Reads the true model.
    bool diagnostics = false;
    bool lemma_checks = true;
    bool history = false;
    // 0: ten times the explicit sample-complexity bound, or kFallbackEpisodes
    // when the oracles do not fit the enumeration budget.
    std::uint64_t max_episodes = 0;
    EnumerationBudget budget{};
};

inline constexpr std::uint64_t kFallbackEpisodes = 100'000'000ULL;

/// Exact quantities shared by many runs on one instance.
struct RunOracles {
    OptimalSolution optimal;
    std::optional<GapReport> gaps;
};
RunOracles make_run_oracles(const Mdp& mdp, EnumerationBudget budget = {}, bool with_gaps = true);

struct EpisodeSummary {
    std::uint64_t policy_hash = 0;
    double stopping_gap = 0.0;
};

/// Counts of per-episode analysis checks that failed (diagnostics only).
struct LemmaChecks {
    std::uint64_t episodes = 0;
    std::uint64_t stopping_gap_failures = 0;  // gap <= 3 sum p b
    std::uint64_t value_gap_failures = 0;     // V* - V^pi <= 2 sum p(.|s,h) b
    std::uint64_t optimism_failures = 0;      // lowerQ <= Q* <= upperQ
    std::uint64_t empty_targets = 0;
    std::string first_failure;
};

struct RunResult {
    std::uint64_t tau = 0;
    bool truncated = false;
    DeterministicPolicy recommended;
    double value_of_recommendation = 0.0;
    double optimal_value = 0.0;
    bool success = false;
    double final_gap = 0.0;     // stopping gap at tau
    double previous_gap = 0.0;  // stopping gap at tau - 1
    std::uint64_t max_episodes = 0;

    bool diagnostics = false;
    TripletArray<std::uint64_t> targeted;  // Z_h^{tau-1}(s, a)
    PseudoCounts pseudo;                   // nbar^tau
    GoodEventLog good_event;
    LemmaChecks lemmas;
    std::vector<EpisodeSummary> history;

    std::uint64_t targeted_total() const;
};

/// Episodes are played until the stopping rule fires (at least one episode is
/// always played) or max_episodes is reached. Rejects unbounded rewards.
RunResult run(const Mdp& mdp, double epsilon, double delta, const RunConfig& config, Rng& rng,
              const RunOracles* oracles = nullptr);

/// Sum over t with G^t of (Z^{t-1} p_min v 1)^{-1/2}: depends only on Z^T and
/// p_min since Z steps by one at every targeting event.
double pigeonhole_sum(std::uint64_t z, double p_min);

}  // namespace optpac
