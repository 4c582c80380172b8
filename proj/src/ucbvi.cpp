#include "optpac/ucbvi.hpp"

#include <algorithm>
#include <stdexcept>

#include "optpac/errors.hpp"
#include "optpac/parallel.hpp"

namespace optpac {

AgentState make_ucbvi_state(const Mdp& mdp) {
    // delta is not used by the Ucbvi schedule.
    AgentState st(mdp, BonusRule::Ucbvi, 0.5);
    st.refresh();
    return st;
}

UcbviStep ucbvi_episode(AgentState& state, const Mdp& mdp, Rng& rng) {
    if (state.rule() != BonusRule::Ucbvi) throw ConfigError("ucbvi_episode needs a Ucbvi learner");
    UcbviStep step{state.sampling_rule(), {}};
    sample_episode(mdp, step.policy, rng, step.trajectory);
    state.update(step.trajectory);
    state.refresh();
    return step;
}

// ---------------------------------------------------------------------------

void RegretTrace::append(const DeterministicPolicy& pi, double regret) {
    ++episodes_;
    if (!segments_.empty() && policies_[segments_.back().policy] == pi) {
        ++segments_.back().length;
        return;
    }
    const double before = segments_.empty()
                              ? 0.0
                              : prefix_.back() + segments_.back().regret * static_cast<double>(segments_.back().length);
    std::uint32_t id = static_cast<std::uint32_t>(policies_.size());
    auto& bucket = by_hash_[pi.hash()];
    for (std::uint32_t k : bucket)
        if (policies_[k] == pi) {
            id = k;
            break;
        }
    if (id == policies_.size()) {
        policies_.push_back(pi);
        bucket.push_back(id);
    }
    segments_.push_back({episodes_, 1, regret, id});
    prefix_.push_back(before);
}

std::size_t RegretTrace::segment_of(std::uint64_t t) const {
    if (t < 1 || t > episodes_) throw std::out_of_range("episode outside the trace");
    const auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                     [](std::uint64_t x, const RegretSegment& s) { return x < s.first; });
    return static_cast<std::size_t>(it - segments_.begin()) - 1;
}

double RegretTrace::regret(std::uint64_t t) const { return segments_[segment_of(t)].regret; }

const DeterministicPolicy& RegretTrace::policy(std::uint64_t t) const {
    return policies_[segments_[segment_of(t)].policy];
}

double RegretTrace::cumulative(std::uint64_t T) const {
    if (T == 0) return 0.0;
    const std::size_t k = segment_of(T);
    return prefix_[k] + segments_[k].regret * static_cast<double>(T - segments_[k].first + 1);
}

RegretTrace run_regret(const Mdp& mdp, std::uint64_t T, Rng& rng) {
    const OptimalSolution opt = optimal_values(mdp);
    const double v_star = opt.values.v(1, mdp.initial_state());
    AgentState st = make_ucbvi_state(mdp);
    RegretTrace trace;
    DeterministicPolicy last;
    double last_regret = 0.0;
    Trajectory traj;
    for (std::uint64_t t = 1; t <= T; ++t) {
        const DeterministicPolicy& pi = st.sampling_rule();
        if (!(pi == last)) {
            last = pi;
            last_regret = std::max(0.0, v_star - evaluate_policy(mdp, pi).v(1, mdp.initial_state()));
        }
        trace.append(last, last_regret);
        sample_episode(mdp, last, rng, traj);
        st.update(traj);
        st.refresh();
    }
    TripletArray<std::uint64_t> counts(mdp.num_states(), mdp.num_actions(), mdp.horizon(), 0);
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s)
            for (int a = 0; a < mdp.num_actions(); ++a) counts(h, s, a) = st.count(h, s, a);
    trace.set_counts(std::move(counts));
    return trace;
}

TEpsilonResult measure_t_epsilon(const Mdp& mdp, double epsilon, double delta, std::uint64_t t_max,
                                 std::uint64_t num_seeds, std::uint64_t master_seed, unsigned jobs) {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (t_max == 0 || num_seeds == 0) throw ConfigError("horizon and seed count must be positive");

    std::vector<std::vector<RegretSegment>> per_seed(num_seeds);
    parallel_for(num_seeds, jobs, [&](std::size_t k) {
        Rng rng(derive_seed({master_seed, static_cast<std::uint64_t>(k)}));
        per_seed[k] = run_regret(mdp, t_max, rng).segments();
    });

    std::vector<double> total(t_max, 0.0);
    for (const auto& segs : per_seed)
        for (const RegretSegment& s : segs) {
            if (s.regret == 0.0) continue;
            for (std::uint64_t t = s.first; t < s.first + s.length; ++t) total[t - 1] += s.regret;
        }
    std::vector<double> mean(t_max);
    double running = 0.0;
    const double n = static_cast<double>(num_seeds);
    for (std::uint64_t T = 1; T <= t_max; ++T) {
        running += total[T - 1];
        mean[T - 1] = running / n;
    }
    return t_epsilon_from_curve(std::move(mean), num_seeds, epsilon, delta);
}

TEpsilonResult t_epsilon_from_curve(std::vector<double> mean_cumulative, std::uint64_t seeds, double epsilon,
                                    double delta) {
    TEpsilonResult out;
    out.horizon = mean_cumulative.size();
    out.seeds = seeds;
    out.threshold = epsilon * delta;
    out.mean_cumulative = std::move(mean_cumulative);
    for (std::uint64_t T = 1; T <= out.horizon; ++T) {
        const bool below = out.mean_average(T) <= out.threshold;
        if (below && !out.first_crossing) out.first_crossing = T;
        if (!below) out.last_above = T;
    }
    if (out.last_above < out.horizon) out.sustained = out.last_above + 1;
    return out;
}

DeterministicPolicy regret_to_pac_sample(const RegretTrace& trace, Rng& rng) {
    if (trace.episodes() == 0) throw ConfigError("empty regret trace");
    std::uniform_int_distribution<std::uint64_t> pick(1, trace.episodes());
    return trace.policy(pick(rng));
}

double eps_bad_fraction(const RegretTrace& trace, double epsilon, std::uint64_t draws, Rng& rng) {
    if (trace.episodes() == 0 || draws == 0) throw ConfigError("empty regret trace or no draws");
    std::uniform_int_distribution<std::uint64_t> pick(1, trace.episodes());
    std::uint64_t bad = 0;
    for (std::uint64_t i = 0; i < draws; ++i)
        if (trace.regret(pick(rng)) > epsilon) ++bad;
    return static_cast<double>(bad) / static_cast<double>(draws);
}

}  // namespace optpac
