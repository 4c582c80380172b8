#pragma once

// Optimistic regret minimization (UCBVI with Hoeffding bonuses and a
// stage-dependent reward bonus at the last stage), exact regret traces, the
// regret-to-PAC conversion and empirical measurement of T_eps.

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "optpac/bpi_ucrl.hpp"
#include "optpac/mdp.hpp"

namespace optpac {

/// Fresh learner using the Ucbvi bonus schedule.
AgentState make_ucbvi_state(const Mdp& mdp);

struct UcbviStep {
    DeterministicPolicy policy;
    Trajectory trajectory;
};

/// Plays the greedy policy of the current upper bounds for one episode and
/// folds the trajectory into `state`.
UcbviStep ucbvi_episode(AgentState& state, const Mdp& mdp, Rng& rng);

/// Consecutive episodes that played the same policy.
struct RegretSegment {
    std::uint64_t first = 1;  // 1-based episode index
    std::uint64_t length = 0;
    double regret = 0.0;      // per-episode exact regret
    std::uint32_t policy = 0;  // index into RegretTrace::policies
};

class RegretTrace {
public:
    std::uint64_t episodes() const { return episodes_; }
    /// V*_1(s1) - V^{pi^t}_1(s1) for 1 <= t <= episodes().
    double regret(std::uint64_t t) const;
    const DeterministicPolicy& policy(std::uint64_t t) const;
    /// Sum of the first T per-episode regrets.
    double cumulative(std::uint64_t T) const;
    double average(std::uint64_t T) const { return T == 0 ? 0.0 : cumulative(T) / static_cast<double>(T); }

    const std::vector<RegretSegment>& segments() const { return segments_; }
    const std::vector<DeterministicPolicy>& policies() const { return policies_; }
    /// Visit counts n_h^T(s, a) at the end of the trace.
    const TripletArray<std::uint64_t>& counts() const { return counts_; }

    void append(const DeterministicPolicy& pi, double regret);
    void set_counts(TripletArray<std::uint64_t> counts) { counts_ = std::move(counts); }

private:
    std::size_t segment_of(std::uint64_t t) const;

    std::uint64_t episodes_ = 0;
    std::vector<RegretSegment> segments_;
    std::vector<double> prefix_;  // cumulative regret before each segment
    std::vector<DeterministicPolicy> policies_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_hash_;
    TripletArray<std::uint64_t> counts_;
};

/// Plays T episodes; regret is computed exactly by policy evaluation.
RegretTrace run_regret(const Mdp& mdp, std::uint64_t T, Rng& rng);

struct TEpsilonResult {
    std::uint64_t horizon = 0;
    std::uint64_t seeds = 0;
    double threshold = 0.0;  // eps * delta
    // First T with mean average regret <= threshold.
    std::optional<std::uint64_t> first_crossing;
    // Smallest T0 such that the mean average regret stays <= threshold for
    // every T in [T0, horizon].
    std::optional<std::uint64_t> sustained;
    // Largest T <= horizon with mean average regret above threshold (0 if none).
    std::uint64_t last_above = 0;
    // Mean over seeds of the cumulative regret after T episodes, T = 1..horizon.
    std::vector<double> mean_cumulative;

    double mean_average(std::uint64_t T) const { return mean_cumulative[T - 1] / static_cast<double>(T); }
};

/// Averages exact regret over `num_seeds` traces whose generators derive from
/// (master_seed, seed index). Independent of `jobs`.
TEpsilonResult measure_t_epsilon(const Mdp& mdp, double epsilon, double delta, std::uint64_t t_max,
                                 std::uint64_t num_seeds, std::uint64_t master_seed, unsigned jobs = 1);

/// Crossing statistics of a mean cumulative-regret curve for threshold
/// eps * delta. The learner itself does not depend on delta.
TEpsilonResult t_epsilon_from_curve(std::vector<double> mean_cumulative, std::uint64_t seeds, double epsilon,
                                    double delta);

/// One of the played policies, uniformly at random.
DeterministicPolicy regret_to_pac_sample(const RegretTrace& trace, Rng& rng);

/// Fraction of `draws` uniform draws whose policy has regret above epsilon.
double eps_bad_fraction(const RegretTrace& trace, double epsilon, std::uint64_t draws, Rng& rng);

}  // namespace optpac
