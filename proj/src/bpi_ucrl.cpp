#include "optpac/bpi_ucrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "optpac/bounds.hpp"
#include "optpac/errors.hpp"
#include "optpac/kernels.hpp"

namespace optpac {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCheckSlack = 1e-9;
constexpr double kTieTolerance = 1e-12;

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("confidence level delta must lie in (0, 1)");
}

void check_t(double t) {
    if (!(t >= 0.0)) throw std::domain_error("threshold time must be non-negative");
}

std::string describe(const Triplet& t) {
    std::ostringstream os;
    os << "(h=" << t.h << ", s=" << t.s << ", a=" << t.a << ")";
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Thresholds

double log_confidence(int S, int A, int H, double delta) {
    check_delta(delta);
    return std::log(3.0 * S * A * H / delta);
}

double beta_r_from_log(double t, double log_conf) { return 0.5 * (log_conf + 1.0 + std::log1p(t)); }

double beta_p_from_log(double t, double log_conf, int S) {
    if (S <= 1) return log_conf;
    const double k = S - 1;
    return log_conf + k * (1.0 + std::log1p(t / k));
}

double beta_from_log(double t, double log_conf, int S) {
    const double x = std::sqrt(beta_r_from_log(t, log_conf)) + std::sqrt(2.0 * beta_p_from_log(t, log_conf, S));
    return x * x;
}

double threshold_beta_r(double t, double delta, int S, int A, int H) {
    check_t(t);
    return beta_r_from_log(t, log_confidence(S, A, H, delta));
}

double threshold_beta_p(double t, double delta, int S, int A, int H) {
    check_t(t);
    return beta_p_from_log(t, log_confidence(S, A, H, delta), S);
}

double threshold_beta(double t, double delta, int S, int A, int H) {
    check_t(t);
    return beta_from_log(t, log_confidence(S, A, H, delta), S);
}

std::string to_string(BonusRule rule) {
    switch (rule) {
        case BonusRule::Stochastic: return "stochastic";
        case BonusRule::Deterministic: return "deterministic";
        case BonusRule::Ucbvi: return "ucbvi";
    }
    return "?";
}

BonusRule parse_bonus_rule(const std::string& name) {
    if (name == "stochastic") return BonusRule::Stochastic;
    if (name == "deterministic") return BonusRule::Deterministic;
    if (name == "ucbvi") return BonusRule::Ucbvi;
    throw ConfigError("unknown bonus variant '" + name + "'");
}

double bonus_value(BonusRule rule, std::uint64_t n, int h, int S, int A, int H, double delta,
                   std::uint64_t t, bool bounded_rewards) {
    const double range = H - h + 1;
    if (n == 0) return range;
    const double nn = static_cast<double>(n);
    switch (rule) {
        case BonusRule::Stochastic:
            return range * std::min(std::sqrt(beta_from_log(nn, std::log(3.0 * S * A * H / delta), S) / nn), 1.0);
        case BonusRule::Deterministic:
            return std::min(std::sqrt(beta_r_from_log(nn, std::log(3.0 * S * A * H / delta)) / nn), 1.0);
        case BonusRule::Ucbvi: {
            const double tt = static_cast<double>(std::max<std::uint64_t>(t, 1));
            if (h == H) {
                const double b = std::sqrt(2.0 * std::log(2.0 * S * A * H * tt * tt) / nn);
                return bounded_rewards ? std::min(b, 1.0) : b;
            }
            const double log_conf = std::log(3.0 * S * A * H) + 2.0 * std::log(tt);
            return range * std::min(std::sqrt(beta_from_log(nn, log_conf, S) / nn), 1.0);
        }
    }
    return range;
}

// ---------------------------------------------------------------------------
// AgentState

AgentState::AgentState(const Mdp& structure, BonusRule rule, double delta)
    : S_(structure.num_states()),
      A_(structure.num_actions()),
      H_(structure.horizon()),
      s1_(structure.initial_state()),
      rule_(rule),
      delta_(delta),
      bounded_(structure.bounded_rewards()),
      upper_(S_, A_, H_),
      lower_(S_, A_, H_),
      greedy_(first_available_policy(structure)) {
    log_conf_ = rule == BonusRule::Ucbvi ? 0.0 : log_confidence(S_, A_, H_, delta);
    const std::size_t n = structure.num_triplets();
    mask_.resize(n);
    for (int h = 1; h <= H_; ++h)
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) mask_[index(h, s, a)] = structure.available(h, s, a) ? 1 : 0;
    n_.assign(n, 0);
    rsum_.assign(n, 0.0);
    ncount_.assign(n * S_, 0);
    rhat_.assign(n, 0.0);
    phat_.assign(n * S_, 0.0);
    bonus_.assign(n, 0.0);
    stale_.assign(n, 0);
    for (int h = 1; h <= H_; ++h)
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) bonus_[index(h, s, a)] = H_ - h + 1;
}

double AgentState::compute_bonus(int h, int s, int a) const {
    return bonus_value(rule_, n_[index(h, s, a)], h, S_, A_, H_, delta_, t_, bounded_);
}

void AgentState::recompute_estimates(std::size_t i) {
    const double n = static_cast<double>(n_[i]);
    if (n_[i] == 0) {
        rhat_[i] = 0.0;
        std::fill_n(phat_.begin() + static_cast<std::ptrdiff_t>(i * S_), S_, 0.0);
        return;
    }
    rhat_[i] = rsum_[i] / n;
    for (int k = 0; k < S_; ++k) phat_[i * S_ + k] = static_cast<double>(ncount_[i * S_ + k]) / n;
}

void AgentState::update(const Trajectory& traj) {
    touched_.clear();
    for (int h = 1; h <= H_; ++h) {
        const int s = traj.states[h - 1];
        const int a = traj.actions[h - 1];
        const int next = h < H_ ? traj.states[h] : traj.final_state;
        const std::size_t i = index(h, s, a);
        if (n_[i]++ == 0) visited_.push_back(i);
        rsum_[i] += traj.rewards[h - 1];
        ++ncount_[i * S_ + next];
        recompute_estimates(i);
        stale_[i] = 1;
        touched_.push_back(i);
    }
    ++t_;
}

void AgentState::refresh() {
    const auto stage_of = [&](std::size_t i) { return static_cast<int>(i / (static_cast<std::size_t>(S_) * A_)) + 1; };
    if (rule_ == BonusRule::Ucbvi && bonus_t_ != t_) {
        // Same values as bonus_value(), with the t-dependent logarithms hoisted.
        const double tt = static_cast<double>(std::max<std::uint64_t>(t_, 1));
        const double last_log = 2.0 * std::log(2.0 * S_ * A_ * H_ * tt * tt);
        const double log_conf = std::log(3.0 * S_ * A_ * H_) + 2.0 * std::log(tt);
        for (std::size_t i : visited_) {
            const int h = stage_of(i);
            const double n = static_cast<double>(n_[i]);
            const double last = std::sqrt(last_log / n);
            bonus_[i] = h == H_ ? (bounded_ ? std::min(last, 1.0) : last)
                                : (H_ - h + 1) * std::min(std::sqrt(beta_from_log(n, log_conf, S_) / n), 1.0);
            stale_[i] = 0;
        }
    } else {
        for (std::size_t i : visited_) {
            if (!stale_[i]) continue;
            const int h = stage_of(i);
            const double n = static_cast<double>(n_[i]);
            bonus_[i] = rule_ == BonusRule::Stochastic
                            ? (H_ - h + 1) * std::min(std::sqrt(beta_from_log(n, log_conf_, S_) / n), 1.0)
                            : std::min(std::sqrt(beta_r_from_log(n, log_conf_) / n), 1.0);
            stale_[i] = 0;
        }
    }
    bonus_t_ = t_;

    const kernels::KernelTable& k = kernels::active();
    for (int h = H_; h >= 1; --h) {
        const double cap = H_ - h + 1;
        const double* up_next = upper_.v_row(h + 1).data();
        const double* lo_next = lower_.v_row(h + 1).data();
        for (int s = 0; s < S_; ++s) {
            double best_u = kNegInf, best_l = kNegInf;
            int arg = -1;
            for (int a = 0; a < A_; ++a) {
                const std::size_t i = index(h, s, a);
                if (!mask_[i]) {
                    upper_.q(h, s, a) = kNegInf;
                    lower_.q(h, s, a) = kNegInf;
                    continue;
                }
                double pu = 0.0, pl = 0.0;
                if (n_[i] != 0) k.dot2(phat_.data() + i * S_, up_next, lo_next, S_, &pu, &pl);
                const double qu = std::min(cap, rhat_[i] + bonus_[i] + pu);
                const double ql = std::max(0.0, rhat_[i] - bonus_[i] + pl);
                upper_.q(h, s, a) = qu;
                lower_.q(h, s, a) = ql;
                if (qu > best_u) {
                    best_u = qu;
                    arg = a;
                }
                best_l = std::max(best_l, ql);
            }
            upper_.v(h, s) = best_u;
            lower_.v(h, s) = best_l;
            greedy_.set(h, s, arg);
        }
    }
}

DeterministicPolicy AgentState::recommend() const {
    DeterministicPolicy pi(S_, H_);
    for (int h = 1; h <= H_; ++h)
        for (int s = 0; s < S_; ++s) {
            double best = kNegInf;
            int arg = -1;
            for (int a = 0; a < A_; ++a) {
                if (!available(h, s, a)) continue;
                if (lower_.q(h, s, a) > best) {
                    best = lower_.q(h, s, a);
                    arg = a;
                }
            }
            pi.set(h, s, arg);
        }
    return pi;
}

double AgentState::stopping_gap() const { return upper_.v(1, s1_) - lower_.v(1, s1_); }

void AgentState::inject_estimates(const Mdp& truth, std::uint64_t n) {
    for (int h = 1; h <= H_; ++h)
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) {
                const std::size_t i = index(h, s, a);
                if (!mask_[i]) continue;
                if (n_[i] == 0 && n > 0) visited_.push_back(i);
                n_[i] = n;
                const auto p = truth.transition(h, s, a);
                rsum_[i] = truth.mean_reward(h, s, a) * static_cast<double>(n);
                for (int k = 0; k < S_; ++k)
                    ncount_[i * S_ + k] = static_cast<std::uint64_t>(std::llround(p[k] * static_cast<double>(n)));
                rhat_[i] = n == 0 ? 0.0 : truth.mean_reward(h, s, a);
                for (int k = 0; k < S_; ++k) phat_[i * S_ + k] = n == 0 ? 0.0 : p[k];
                bonus_[i] = bonus_value(rule_, n, h, S_, A_, H_, delta_, t_, bounded_);
                stale_[i] = 0;
            }
    bonus_t_ = t_;
    refresh();
}

// ---------------------------------------------------------------------------
// Per-policy bounds

PolicyBounds policy_confidence_bounds(const AgentState& st, const DeterministicPolicy& pi) {
    const int S = st.num_states(), A = st.num_actions(), H = st.horizon();
    PolicyBounds out{ValueTable(S, A, H), ValueTable(S, A, H)};
    for (int h = H; h >= 1; --h) {
        const double cap = H - h + 1;
        const auto up_next = out.upper.v_row(h + 1);
        const auto lo_next = out.lower.v_row(h + 1);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                if (!st.available(h, s, a)) {
                    out.upper.q(h, s, a) = kNegInf;
                    out.lower.q(h, s, a) = kNegInf;
                    continue;
                }
                double pu = 0.0, pl = 0.0;
                kernels::dot2(st.p_hat(h, s, a), up_next, lo_next, pu, pl);
                const double b = st.bonus(h, s, a);
                out.upper.q(h, s, a) = std::min(cap, st.r_hat(h, s, a) + b + pu);
                out.lower.q(h, s, a) = std::max(0.0, st.r_hat(h, s, a) - b + pl);
            }
            out.upper.v(h, s) = out.upper.q(h, s, pi(h, s));
            out.lower.v(h, s) = out.lower.q(h, s, pi(h, s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Good event

void PseudoCounts::add(const VisitationTable& vis, int S, int A, int H, double weight) {
    for (int h = 1; h <= H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) counts_(h, s, a) += weight * vis.pair(h, s, a);
}

std::string to_string(GoodEventPart part) {
    switch (part) {
        case GoodEventPart::Reward: return "E^r";
        case GoodEventPart::Transition: return "E^p";
        case GoodEventPart::Count: return "E^c";
    }
    return "?";
}

double kl_categorical(std::span<const double> p, std::span<const double> q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0)
            throw ConsistencyError("empirical distribution puts mass on successor " + std::to_string(i) +
                                   " that the model cannot produce");
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(kl, 0.0);
}

namespace {

struct TripletCheck {
    bool reward, transition, count;
    double r_lhs, r_rhs, p_lhs, p_rhs, c_lhs, c_rhs;
};

TripletCheck check_triplet(const AgentState& st, const Mdp& mdp, double nbar, int h, int s, int a,
                           double log_conf) {
    TripletCheck c{};
    const std::uint64_t n = st.count(h, s, a);
    const double nv = static_cast<double>(std::max<std::uint64_t>(n, 1));
    c.r_lhs = std::abs(mdp.mean_reward(h, s, a) - st.r_hat(h, s, a));
    c.r_rhs = std::sqrt(beta_r_from_log(static_cast<double>(n), log_conf) / nv);
    c.reward = c.r_lhs <= c.r_rhs;
    c.p_lhs = n == 0 ? 0.0 : kl_categorical(st.p_hat(h, s, a), mdp.transition(h, s, a));
    c.p_rhs = beta_p_from_log(static_cast<double>(n), log_conf, st.num_states()) / nv;
    c.transition = c.p_lhs <= c.p_rhs;
    c.c_lhs = static_cast<double>(n);
    c.c_rhs = 0.5 * nbar - log_conf;
    c.count = c.c_lhs >= c.c_rhs;
    return c;
}

}  // namespace

GoodEventStatus good_event_check(const AgentState& st, const Mdp& mdp, const PseudoCounts& pseudo) {
    GoodEventStatus out;
    const double L = log_confidence(st.num_states(), st.num_actions(), st.horizon(), st.delta());
    const auto note = [&](GoodEventPart part, int h, int s, int a, double lhs, double rhs) {
        if (!out.first) out.first = GoodEventViolation{st.episodes(), part, Triplet{h, s, a}, lhs, rhs};
    };
    for (int h = 1; h <= st.horizon(); ++h)
        for (int s = 0; s < st.num_states(); ++s)
            for (int a = 0; a < st.num_actions(); ++a) {
                if (!st.available(h, s, a)) continue;
                const TripletCheck c = check_triplet(st, mdp, pseudo(h, s, a), h, s, a, L);
                if (!c.reward) {
                    out.reward = false;
                    note(GoodEventPart::Reward, h, s, a, c.r_lhs, c.r_rhs);
                }
                if (!c.transition) {
                    out.transition = false;
                    note(GoodEventPart::Transition, h, s, a, c.p_lhs, c.p_rhs);
                }
                if (!c.count) {
                    out.count = false;
                    note(GoodEventPart::Count, h, s, a, c.c_lhs, c.c_rhs);
                }
            }
    return out;
}

void GoodEventLog::record(std::uint64_t episode, const GoodEventStatus& status) {
    ++episodes_checked;
    if (!status.reward) ++reward_failures;
    if (!status.transition) ++transition_failures;
    if (!status.count) ++count_failures;
    if (!first && status.first) {
        first = status.first;
        first->episode = episode;
    }
}

std::vector<Triplet> targeted_set(const AgentState& st, const VisitationTable& vis) {
    double best = kNegInf;
    for (int h = 1; h <= st.horizon(); ++h)
        for (int s = 0; s < st.num_states(); ++s)
            for (int a = 0; a < st.num_actions(); ++a)
                if (vis.pair(h, s, a) > kPositiveMass) best = std::max(best, st.bonus(h, s, a));
    std::vector<Triplet> out;
    for (int h = 1; h <= st.horizon(); ++h)
        for (int s = 0; s < st.num_states(); ++s)
            for (int a = 0; a < st.num_actions(); ++a)
                if (vis.pair(h, s, a) > kPositiveMass && st.bonus(h, s, a) >= best - kTieTolerance)
                    out.push_back({h, s, a});
    return out;
}

// ---------------------------------------------------------------------------
// Full loop

RunOracles make_run_oracles(const Mdp& mdp, EnumerationBudget budget, bool with_gaps) {
    RunOracles o{optimal_values(mdp), std::nullopt};
    if (with_gaps) {
        try {
            o.gaps = gap_report(mdp, budget);
        } catch (const BudgetExceeded&) {
            o.gaps.reset();
        }
    }
    return o;
}

std::uint64_t RunResult::targeted_total() const {
    std::uint64_t total = 0;
    for (std::uint64_t z : targeted.raw()) total += z;
    return total;
}

double pigeonhole_sum(std::uint64_t z, double p_min) {
    double total = 0.0;
    for (std::uint64_t j = 0; j < z; ++j) total += 1.0 / std::sqrt(std::max(static_cast<double>(j) * p_min, 1.0));
    return total;
}

namespace {

// Incremental good-event bookkeeping: E^r and E^p only change on touched
// triplets, E^c is re-checked everywhere.
class GoodEventTracker {
public:
    GoodEventTracker(const AgentState& st, const Mdp& mdp)
        : mdp_(&mdp),
          L_(log_confidence(st.num_states(), st.num_actions(), st.horizon(), st.delta())),
          bad_r_(mdp.num_triplets(), 0),
          bad_p_(mdp.num_triplets(), 0) {}

    GoodEventStatus check(const AgentState& st, const PseudoCounts& pseudo, bool full) {
        GoodEventStatus out;
        const auto note = [&](GoodEventPart part, int h, int s, int a, double lhs, double rhs) {
            if (!out.first) out.first = GoodEventViolation{st.episodes(), part, Triplet{h, s, a}, lhs, rhs};
        };
        const int S = st.num_states(), A = st.num_actions();
        const auto visit = [&](std::size_t i) {
            const int h = static_cast<int>(i / (static_cast<std::size_t>(S) * A)) + 1;
            const int s = static_cast<int>((i / A) % S);
            const int a = static_cast<int>(i % A);
            const TripletCheck c = check_triplet(st, *mdp_, pseudo(h, s, a), h, s, a, L_);
            bad_count_r_ += (c.reward ? 0 : 1) - bad_r_[i];
            bad_r_[i] = c.reward ? 0 : 1;
            bad_count_p_ += (c.transition ? 0 : 1) - bad_p_[i];
            bad_p_[i] = c.transition ? 0 : 1;
            if (!c.reward) note(GoodEventPart::Reward, h, s, a, c.r_lhs, c.r_rhs);
            if (!c.transition) note(GoodEventPart::Transition, h, s, a, c.p_lhs, c.p_rhs);
        };
        if (full) {
            for (std::size_t i = 0; i < mdp_->num_triplets(); ++i)
                if (st.available(static_cast<int>(i / (static_cast<std::size_t>(S) * A)) + 1,
                                 static_cast<int>((i / A) % S), static_cast<int>(i % A)))
                    visit(i);
        } else {
            for (std::size_t i : st.touched()) visit(i);
        }
        out.reward = bad_count_r_ == 0;
        out.transition = bad_count_p_ == 0;
        const double shift = L_;
        for (int h = 1; h <= st.horizon(); ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const double nbar = pseudo(h, s, a);
                    const double n = static_cast<double>(st.count(h, s, a));
                    if (n < 0.5 * nbar - shift) {
                        out.count = false;
                        note(GoodEventPart::Count, h, s, a, n, 0.5 * nbar - shift);
                    }
                }
        return out;
    }

private:
    const Mdp* mdp_;
    double L_;
    std::vector<int> bad_r_, bad_p_;
    long bad_count_r_ = 0, bad_count_p_ = 0;
};

}  // namespace

RunResult run(const Mdp& mdp, double epsilon, double delta, const RunConfig& cfg, Rng& rng,
              const RunOracles* oracles) {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!mdp.bounded_rewards())
        throw ConfigError("rewards must be supported on [0, 1]; re-model Gaussian rewards as Bernoulli");
    if (cfg.rule == BonusRule::Ucbvi) throw ConfigError("the ucbvi bonus has no stopping rule");

    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    RunOracles local;
    if (!oracles) {
        local = make_run_oracles(mdp, cfg.budget, cfg.max_episodes == 0);
        oracles = &local;
    }
    std::uint64_t max_episodes = cfg.max_episodes;
    if (max_episodes == 0) {
        max_episodes = kFallbackEpisodes;
        if (oracles->gaps) {
            const double cap = 10.0 * explicit_sample_bound(*oracles->gaps, delta, epsilon).total;
            if (cap < 1e18) max_episodes = static_cast<std::uint64_t>(std::ceil(cap));
        }
    }
    const double v_star = oracles->optimal.values.v(1, mdp.initial_state());

    RunResult res;
    res.max_episodes = max_episodes;
    res.diagnostics = cfg.diagnostics;
    res.targeted = TripletArray<std::uint64_t>(S, A, H, 0);
    res.pseudo = PseudoCounts(S, A, H);

    AgentState st(mdp, cfg.rule, delta);
    st.refresh();
    DeterministicPolicy pi = st.sampling_rule();

    GoodEventTracker tracker(st, mdp);
    VisitationTable vis;
    ValueTable v_pi;
    DeterministicPolicy cached;
    std::vector<double> w(static_cast<std::size_t>(H + 1) * S, 0.0);
    std::vector<std::size_t> last_targets;
    const ValueTable& q_star = oracles->optimal.values;

    const auto fail = [&](const std::string& what) {
        if (res.lemmas.first_failure.empty()) res.lemmas.first_failure = what;
    };

    Trajectory traj;
    double gap = st.stopping_gap();
    double prev_gap = gap;
    std::uint64_t t = 0;
    for (;;) {
        if (t >= 1 && gap <= epsilon) break;
        if (t >= max_episodes) {
            res.truncated = true;
            break;
        }
        if (cfg.diagnostics) {
            if (!(pi == cached)) {
                vis = visitation_probabilities(mdp, pi);
                v_pi = evaluate_policy(mdp, pi);
                cached = pi;
            }
            res.pseudo.add(vis, S, A, H);
        }
        if (cfg.diagnostics && cfg.lemma_checks) {
            ++res.lemmas.episodes;
            // Stopping gap against 3 sum p^{pi^{t+1}} b^t.
            double weighted = 0.0;
            for (int h = 1; h <= H; ++h)
                for (int s = 0; s < S; ++s) {
                    const double p = vis.state(h, s);
                    if (p != 0.0) weighted += p * st.bonus(h, s, pi(h, s));
                }
            if (gap > 3.0 * weighted + kCheckSlack) {
                ++res.lemmas.stopping_gap_failures;
                fail("stopping gap " + std::to_string(gap) + " > 3 * " + std::to_string(weighted) + " at t=" +
                     std::to_string(t));
            }
            // V* - V^pi <= 2 W with W_h(s) = b_h(s, pi) + sum_s' p_h(s'|s, pi) W_{h+1}(s').
            bool value_ok = true;
            for (int h = H; h >= 1; --h) {
                const std::span<const double> next(w.data() + static_cast<std::size_t>(h) * S, S);
                for (int s = 0; s < S; ++s) {
                    const int a = pi(h, s);
                    const double wh = st.bonus(h, s, a) + kernels::dot(mdp.transition(h, s, a), next);
                    w[static_cast<std::size_t>(h - 1) * S + s] = wh;
                    const double lhs = q_star.v(h, s) - v_pi.v(h, s);
                    if (lhs > 2.0 * wh + kCheckSlack && value_ok) {
                        value_ok = false;
                        fail("value gap " + std::to_string(lhs) + " > 2 * " + std::to_string(wh) + " at (h=" +
                             std::to_string(h) + ", s=" + std::to_string(s) + "), t=" + std::to_string(t));
                    }
                }
            }
            if (!value_ok) ++res.lemmas.value_gap_failures;
            // lowerQ <= Q* <= upperQ
            bool optimism_ok = true;
            for (int h = 1; h <= H && optimism_ok; ++h)
                for (int s = 0; s < S && optimism_ok; ++s)
                    for (int a : mdp.actions(h, s)) {
                        const double q = q_star.q(h, s, a);
                        if (st.lower().q(h, s, a) > q + kCheckSlack || st.upper().q(h, s, a) < q - kCheckSlack) {
                            optimism_ok = false;
                            fail("Q* outside [lowerQ, upperQ] at " + describe({h, s, a}) + ", t=" + std::to_string(t));
                            break;
                        }
                    }
            if (!optimism_ok) ++res.lemmas.optimism_failures;
            // Targeting for episode t+1: p^{pi^{t+1}} and b^t.
            const std::vector<Triplet> targets = targeted_set(st, vis);
            if (targets.empty()) ++res.lemmas.empty_targets;
            last_targets.clear();
            for (const Triplet& x : targets) {
                ++res.targeted(x.h, x.s, x.a);
                last_targets.push_back(mdp.triplet(x.h, x.s, x.a));
            }
        }
        if (cfg.history) res.history.push_back({pi.hash(), gap});

        sample_episode(mdp, pi, rng, traj);
        st.update(traj);
        st.refresh();
        ++t;
        prev_gap = gap;
        gap = st.stopping_gap();
        pi = st.sampling_rule();

        if (cfg.diagnostics) res.good_event.record(t, tracker.check(st, res.pseudo, t == 1));
    }

    for (std::size_t i : last_targets) --res.targeted.raw()[i];
    res.tau = t;
    res.final_gap = gap;
    res.previous_gap = prev_gap;
    res.recommended = st.recommend();
    res.value_of_recommendation = evaluate_policy(mdp, res.recommended).v(1, mdp.initial_state());
    res.optimal_value = v_star;
    res.success = res.value_of_recommendation >= v_star - epsilon;
    return res;
}

}  // namespace optpac
