#include "optpac/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "optpac/errors.hpp"
#include "optpac/kernels.hpp"

namespace optpac {

namespace {

std::string at(int h, int s, int a) {
    std::ostringstream os;
    os << "(h=" << h << ", s=" << s << ", a=" << a << ")";
    return os.str();
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double RewardModel::sample(Rng& rng) const {
    switch (kind) {
        case RewardKind::Fixed: return mean;
        case RewardKind::Bernoulli: return uniform01(rng) < mean ? 1.0 : 0.0;
        case RewardKind::Gaussian: {
            std::normal_distribution<double> normal(mean, std::sqrt(variance));
            return normal(rng);
        }
    }
    return mean;
}

// ---------------------------------------------------------------------------
// MdpBuilder

MdpBuilder::MdpBuilder(int num_states, int num_actions, int horizon, int initial_state)
    : S_(num_states), A_(num_actions), H_(horizon), s1_(initial_state) {
    if (S_ < 1 || A_ < 1 || H_ < 1)
        throw ModelError("S, A and H must be positive (got S=" + std::to_string(S_) +
                         ", A=" + std::to_string(A_) + ", H=" + std::to_string(H_) + ")");
    if (s1_ < 0 || s1_ >= S_)
        throw ModelError("initial state " + std::to_string(s1_) + " outside [0, S)");
    const std::size_t n = static_cast<std::size_t>(H_) * S_ * A_;
    mask_.assign(n, 1);
    p_.assign(n * S_, 0.0);
    rewards_.assign(n, RewardModel::fixed(0.0));
    for (int h = 1; h <= H_; ++h)
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) p_[triplet(h, s, a) * S_ + s] = 1.0;
}

std::size_t MdpBuilder::triplet(int h, int s, int a) const {
    return (static_cast<std::size_t>(h - 1) * S_ + s) * A_ + a;
}

void MdpBuilder::check_coords(int h, int s, int a) const {
    if (h < 1 || h > H_ || s < 0 || s >= S_ || a < 0 || a >= A_)
        throw ModelError("coordinates out of range " + at(h, s, a));
}

MdpBuilder& MdpBuilder::set_available(int h, int s, int a, bool available) {
    check_coords(h, s, a);
    mask_[triplet(h, s, a)] = available ? 1 : 0;
    return *this;
}

MdpBuilder& MdpBuilder::set_actions(int h, int s, std::span<const int> actions) {
    check_coords(h, s, 0);
    for (int a = 0; a < A_; ++a) mask_[triplet(h, s, a)] = 0;
    for (int a : actions) set_available(h, s, a, true);
    return *this;
}

MdpBuilder& MdpBuilder::set_transition(int h, int s, int a, std::span<const double> next) {
    check_coords(h, s, a);
    if (static_cast<int>(next.size()) != S_)
        throw ModelError("transition row " + at(h, s, a) + " has length " +
                         std::to_string(next.size()) + ", expected " + std::to_string(S_));
    std::copy(next.begin(), next.end(), p_.begin() + static_cast<std::ptrdiff_t>(triplet(h, s, a) * S_));
    return *this;
}

MdpBuilder& MdpBuilder::set_deterministic(int h, int s, int a, int next_state) {
    check_coords(h, s, a);
    if (next_state < 0 || next_state >= S_)
        throw ModelError("next state " + std::to_string(next_state) + " out of range at " + at(h, s, a));
    auto row = p_.begin() + static_cast<std::ptrdiff_t>(triplet(h, s, a) * S_);
    std::fill(row, row + S_, 0.0);
    row[next_state] = 1.0;
    return *this;
}

MdpBuilder& MdpBuilder::set_reward(int h, int s, int a, RewardModel model) {
    check_coords(h, s, a);
    rewards_[triplet(h, s, a)] = model;
    return *this;
}

Mdp MdpBuilder::build() const {
    Mdp m;
    m.S_ = S_;
    m.A_ = A_;
    m.H_ = H_;
    m.s1_ = s1_;
    m.mask_ = mask_;
    m.p_ = p_;
    m.rewards_ = rewards_;

    const std::size_t cells = static_cast<std::size_t>(H_) * S_;
    m.action_offset_.assign(cells + 1, 0);
    for (int h = 1; h <= H_; ++h) {
        for (int s = 0; s < S_; ++s) {
            const std::size_t c = m.cell(h, s);
            m.action_offset_[c] = static_cast<std::uint32_t>(m.action_list_.size());
            for (int a = 0; a < A_; ++a)
                if (mask_[triplet(h, s, a)]) m.action_list_.push_back(a);
            if (m.action_list_.size() == m.action_offset_[c])
                throw ModelError("no available action at (h=" + std::to_string(h) +
                                 ", s=" + std::to_string(s) + ")");
        }
    }
    m.action_offset_[cells] = static_cast<std::uint32_t>(m.action_list_.size());

    m.means_.resize(rewards_.size());
    m.cdf_.assign(p_.size(), 1.0);
    for (int h = 1; h <= H_; ++h) {
        for (int s = 0; s < S_; ++s) {
            for (int a = 0; a < A_; ++a) {
                const std::size_t t = triplet(h, s, a);
                const RewardModel& r = rewards_[t];
                m.means_[t] = r.mean;
                if (!mask_[t]) continue;
                if (!std::isfinite(r.mean))
                    throw ModelError("non-finite reward mean at " + at(h, s, a));
                if (r.kind == RewardKind::Gaussian) {
                    if (!(r.variance > 0.0) || !std::isfinite(r.variance))
                        throw ModelError("gaussian reward variance must be > 0 at " + at(h, s, a));
                    m.bounded_ = false;
                } else if (r.mean < 0.0 || r.mean > 1.0) {
                    throw ModelError("reward mean " + std::to_string(r.mean) +
                                     " outside [0, 1] at " + at(h, s, a));
                }

                double* row = m.p_.data() + t * S_;
                double sum = 0.0;
                for (int sp = 0; sp < S_; ++sp) {
                    if (!std::isfinite(row[sp]) || row[sp] < 0.0)
                        throw ModelError("invalid transition probability p(" + std::to_string(sp) +
                                         ") = " + std::to_string(row[sp]) + " at " + at(h, s, a));
                    sum += row[sp];
                }
                if (std::abs(sum - 1.0) > kProbabilityTolerance)
                    throw ModelError("transition row at " + at(h, s, a) + " sums to " +
                                     std::to_string(sum));
                // Rows already stochastic up to rounding are kept bit-exact.
                const double scale = std::abs(sum - 1.0) > 1e-14 ? sum : 1.0;
                int support = 0;
                int last_positive = 0;
                for (int sp = 0; sp < S_; ++sp) {
                    row[sp] /= scale;
                    if (row[sp] > 0.0) {
                        ++support;
                        last_positive = sp;
                    }
                }
                if (support != 1) m.deterministic_ = false;
                double* cdf = m.cdf_.data() + t * S_;
                double acc = 0.0;
                for (int sp = 0; sp < S_; ++sp) {
                    acc += row[sp];
                    cdf[sp] = sp >= last_positive ? 1.0 : acc;
                }
            }
        }
    }

    m.reachable_.assign(cells, 0);
    m.reachable_[m.cell(1, s1_)] = 1;
    for (int h = 1; h < H_; ++h) {
        for (int s = 0; s < S_; ++s) {
            if (!m.reachable_[m.cell(h, s)]) continue;
            for (int a : m.actions(h, s)) {
                const auto row = m.transition(h, s, a);
                for (int sp = 0; sp < S_; ++sp)
                    if (row[sp] > 0.0) m.reachable_[m.cell(h + 1, sp)] = 1;
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Mdp

std::span<const int> Mdp::actions(int h, int s) const {
    const std::size_t c = cell(h, s);
    return {action_list_.data() + action_offset_[c], action_offset_[c + 1] - action_offset_[c]};
}

int Mdp::sample_next(int h, int s, int a, Rng& rng) const {
    const double u = uniform01(rng);
    const double* cdf = cdf_.data() + triplet(h, s, a) * S_;
    for (int sp = 0; sp < S_ - 1; ++sp)
        if (u < cdf[sp]) return sp;
    return S_ - 1;
}

std::vector<Triplet> Mdp::available_triplets() const {
    std::vector<Triplet> out;
    for (int h = 1; h <= H_; ++h)
        for (int s = 0; s < S_; ++s)
            for (int a : actions(h, s)) out.push_back({h, s, a});
    return out;
}

bool operator==(const Mdp& x, const Mdp& y) {
    return x.S_ == y.S_ && x.A_ == y.A_ && x.H_ == y.H_ && x.s1_ == y.s1_ && x.mask_ == y.mask_ &&
           x.p_ == y.p_ && x.rewards_ == y.rewards_;
}

// ---------------------------------------------------------------------------
// Policies

DeterministicPolicy::DeterministicPolicy(int num_states, int horizon, int fill)
    : S_(num_states), H_(horizon), act_(static_cast<std::size_t>(num_states) * horizon, fill) {}

std::uint64_t DeterministicPolicy::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int a : act_) {
        h ^= static_cast<std::uint64_t>(a) + 1;
        h *= 0x100000001b3ULL;
    }
    return h;
}

DeterministicPolicy first_available_policy(const Mdp& mdp) {
    DeterministicPolicy pi(mdp.num_states(), mdp.horizon());
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s) pi.set(h, s, mdp.first_action(h, s));
    return pi;
}

void validate_policy(const Mdp& mdp, const DeterministicPolicy& pi) {
    if (pi.num_states() != mdp.num_states() || pi.horizon() != mdp.horizon())
        throw ModelError("policy shape does not match the MDP");
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s) {
            const int a = pi(h, s);
            if (a < 0 || a >= mdp.num_actions() || !mdp.available(h, s, a))
                throw ModelError("policy action " + std::to_string(a) + " unavailable at (h=" +
                                 std::to_string(h) + ", s=" + std::to_string(s) + ")");
        }
}

// ---------------------------------------------------------------------------
// Values

ValueTable::ValueTable(int num_states, int num_actions, int horizon)
    : S_(num_states),
      A_(num_actions),
      H_(horizon),
      q_(static_cast<std::size_t>(horizon + 1) * num_states * num_actions, 0.0),
      v_(static_cast<std::size_t>(horizon + 1) * num_states, 0.0) {}

ValueTable evaluate_policy(const Mdp& mdp, const DeterministicPolicy& pi) {
    validate_policy(mdp, pi);
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    ValueTable vt(S, A, H);
    for (int h = H; h >= 1; --h) {
        const auto next = vt.v_row(h + 1);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                if (!mdp.available(h, s, a)) {
                    vt.q(h, s, a) = kNegInf;
                    continue;
                }
                vt.q(h, s, a) = mdp.mean_reward(h, s, a) + kernels::dot(mdp.transition(h, s, a), next);
            }
            vt.v(h, s) = vt.q(h, s, pi(h, s));
        }
    }
    return vt;
}

OptimalSolution optimal_values(const Mdp& mdp) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    OptimalSolution out{ValueTable(S, A, H), DeterministicPolicy(S, H)};
    ValueTable& vt = out.values;
    for (int h = H; h >= 1; --h) {
        const auto next = vt.v_row(h + 1);
        for (int s = 0; s < S; ++s) {
            double best = kNegInf;
            int best_a = -1;
            for (int a = 0; a < A; ++a) {
                if (!mdp.available(h, s, a)) {
                    vt.q(h, s, a) = kNegInf;
                    continue;
                }
                const double q = mdp.mean_reward(h, s, a) + kernels::dot(mdp.transition(h, s, a), next);
                vt.q(h, s, a) = q;
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            vt.v(h, s) = best;
            out.policy.set(h, s, best_a);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Visitation

VisitationTable::VisitationTable(int num_states, int num_actions, int horizon)
    : S_(num_states),
      A_(num_actions),
      H_(horizon),
      state_(static_cast<std::size_t>(horizon) * num_states, 0.0),
      pair_(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0) {}

VisitationTable visitation_probabilities(const Mdp& mdp, const DeterministicPolicy& pi,
                                         std::optional<StageState> from) {
    validate_policy(mdp, pi);
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const StageState start = from.value_or(StageState{1, mdp.initial_state()});
    if (start.h < 1 || start.h > H || start.s < 0 || start.s >= S)
        throw ModelError("conditional visitation start outside the MDP");
    VisitationTable vt(S, A, H);
    vt.set_start_stage(start.h);
    vt.state(start.h, start.s) = 1.0;
    for (int h = start.h; h <= H; ++h) {
        for (int s = 0; s < S; ++s) {
            const double mass = vt.state(h, s);
            if (mass == 0.0) continue;
            const int a = pi(h, s);
            vt.pair(h, s, a) = mass;
            if (h < H) kernels::axpy(mass, mdp.transition(h, s, a), vt.state_row(h + 1));
        }
    }
    return vt;
}

// ---------------------------------------------------------------------------
// Sampling

void sample_episode(const Mdp& mdp, const DeterministicPolicy& pi, Rng& rng, Trajectory& out) {
    const int H = mdp.horizon();
    out.states.resize(H);
    out.actions.resize(H);
    out.rewards.resize(H);
    int s = mdp.initial_state();
    for (int h = 1; h <= H; ++h) {
        const int a = pi(h, s);
        out.states[h - 1] = s;
        out.actions[h - 1] = a;
        out.rewards[h - 1] = mdp.reward(h, s, a).sample(rng);
        s = mdp.sample_next(h, s, a, rng);
    }
    out.final_state = s;
}

Trajectory sample_episode(const Mdp& mdp, const DeterministicPolicy& pi, Rng& rng) {
    validate_policy(mdp, pi);
    Trajectory t;
    sample_episode(mdp, pi, rng, t);
    return t;
}

}  // namespace optpac
