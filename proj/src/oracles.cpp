#include "optpac/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "optpac/errors.hpp"
#include "optpac/parallel.hpp"

namespace optpac {

namespace {

bool in_range(const std::optional<StageRange>& stages, int h) {
    return !stages || (h >= stages->first && h <= stages->last);
}

struct Extremes {
    std::vector<double> cond, ret, pmin, pmax;

    explicit Extremes(std::size_t n) : cond(n, kInf), ret(n, kInf), pmin(n, kInf), pmax(n, 0.0) {}

    void merge(const Extremes& o) {
        for (std::size_t i = 0; i < cond.size(); ++i) {
            cond[i] = std::min(cond[i], o.cond[i]);
            ret[i] = std::min(ret[i], o.ret[i]);
            pmin[i] = std::min(pmin[i], o.pmin[i]);
            pmax[i] = std::max(pmax[i], o.pmax[i]);
        }
    }
};

// Splits [0, n) into contiguous ranges, one reduction slot each.
template <class Fn>
std::vector<Extremes> reduce_ranges(std::uint64_t n, unsigned jobs, std::size_t width, Fn&& body) {
    const unsigned workers = resolve_jobs(jobs);
    const std::uint64_t parts = workers <= 1 ? 1 : std::min<std::uint64_t>(n, 4ULL * workers);
    std::vector<Extremes> slots(std::max<std::uint64_t>(parts, 1), Extremes(width));
    parallel_for(slots.size(), workers, [&](std::size_t k) {
        const std::uint64_t begin = n * k / slots.size();
        const std::uint64_t end = n * (k + 1) / slots.size();
        body(begin, end, slots[k]);
    });
    return slots;
}

Extremes full_enumeration(const Mdp& mdp, EnumerationBudget budget, unsigned jobs) {
    const int S = mdp.num_states(), H = mdp.horizon();
    const PolicySpace space(mdp, budget, std::nullopt, true);
    const OptimalSolution opt = optimal_values(mdp);
    const double v_star = opt.values.v(1, mdp.initial_state());

    auto slots = reduce_ranges(space.size(), jobs, mdp.num_triplets(),
                               [&](std::uint64_t begin, std::uint64_t end, Extremes& acc) {
        space.for_range(begin, end, [&](const DeterministicPolicy& pi) {
            const ValueTable vt = evaluate_policy(mdp, pi);
            const VisitationTable vis = visitation_probabilities(mdp, pi);
            double worst = 0.0;
            for (int h = 1; h <= H; ++h)
                for (int s = 0; s < S; ++s)
                    if (vis.state(h, s) > kPositiveMass)
                        worst = std::max(worst, opt.values.v(h, s) - vt.v(h, s));
            const double ret = std::max(0.0, v_star - vt.v(1, mdp.initial_state()));
            for (int h = 1; h <= H; ++h)
                for (int s = 0; s < S; ++s) {
                    const double p = vis.state(h, s);
                    if (!(p > kPositiveMass)) continue;
                    const std::size_t i = mdp.triplet(h, s, pi(h, s));
                    acc.cond[i] = std::min(acc.cond[i], worst);
                    acc.ret[i] = std::min(acc.ret[i], ret);
                    acc.pmin[i] = std::min(acc.pmin[i], p);
                    acc.pmax[i] = std::max(acc.pmax[i], p);
                }
        });
    });
    for (std::size_t k = 1; k < slots.size(); ++k) slots[0].merge(slots[k]);
    return std::move(slots[0]);
}

GapTable to_table(const Mdp& mdp, const std::vector<double>& v) {
    GapTable t(mdp.num_states(), mdp.num_actions(), mdp.horizon());
    t.raw() = v;
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------

double GapReport::global_p_min() const {
    double m = kInf;
    for (std::size_t i = 0; i < p_min.raw().size(); ++i)
        if (!unreachable.raw()[i]) m = std::min(m, p_min.raw()[i]);
    return m;
}

PolicySpace::PolicySpace(const Mdp& mdp, EnumerationBudget budget, std::optional<StageRange> stages,
                         bool reachable_only)
    : mdp_(&mdp), base_(first_available_policy(mdp)) {
    long double count = 1.0L;
    for (int h = 1; h <= mdp.horizon(); ++h) {
        if (!in_range(stages, h)) continue;
        for (int s = 0; s < mdp.num_states(); ++s) {
            if (reachable_only && !mdp.reachable(h, s)) continue;
            const auto acts = mdp.actions(h, s);
            if (acts.size() < 2) continue;
            cells_.push_back({h, s, std::vector<int>(acts.begin(), acts.end())});
            count *= static_cast<long double>(acts.size());
        }
    }
    if (count > static_cast<long double>(budget.max_policies))
        throw BudgetExceeded(count, budget.max_policies);
    size_ = static_cast<std::uint64_t>(count);
}

void PolicySpace::decode(std::uint64_t index, DeterministicPolicy& out) const {
    out = base_;
    for (const Cell& c : cells_) {
        const std::uint64_t radix = c.actions.size();
        out.set(c.h, c.s, c.actions[index % radix]);
        index /= radix;
    }
}

bool PolicySpace::advance(DeterministicPolicy& pi) const {
    for (const Cell& c : cells_) {
        const int cur = pi(c.h, c.s);
        const auto it = std::find(c.actions.begin(), c.actions.end(), cur);
        const std::size_t pos = static_cast<std::size_t>(it - c.actions.begin()) + 1;
        if (pos < c.actions.size()) {
            pi.set(c.h, c.s, c.actions[pos]);
            return true;
        }
        pi.set(c.h, c.s, c.actions.front());
    }
    return false;
}

long double count_policies(const Mdp& mdp, std::optional<StageRange> stages, bool reachable_only) {
    long double count = 1.0L;
    for (int h = 1; h <= mdp.horizon(); ++h) {
        if (!in_range(stages, h)) continue;
        for (int s = 0; s < mdp.num_states(); ++s) {
            if (reachable_only && !mdp.reachable(h, s)) continue;
            count *= static_cast<long double>(mdp.actions(h, s).size());
        }
    }
    return count;
}

std::vector<DeterministicPolicy> enumerate_policies(const Mdp& mdp, EnumerationBudget budget,
                                                    std::optional<StageRange> stages) {
    const PolicySpace space(mdp, budget, stages);
    std::vector<DeterministicPolicy> out;
    out.reserve(space.size());
    space.for_range(0, space.size(), [&](const DeterministicPolicy& pi) { out.push_back(pi); });
    return out;
}

GapTable value_gaps(const Mdp& mdp) {
    const OptimalSolution opt = optimal_values(mdp);
    GapTable g(mdp.num_states(), mdp.num_actions(), mdp.horizon(), kInf);
    for (int h = 1; h <= mdp.horizon(); ++h)
        for (int s = 0; s < mdp.num_states(); ++s)
            for (int a : mdp.actions(h, s)) g(h, s, a) = opt.values.v(h, s) - opt.values.q(h, s, a);
    return g;
}

VisitationExtremes min_max_visitation(const Mdp& mdp, EnumerationBudget budget, unsigned jobs) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    VisitationExtremes out{GapTable(S, A, H, kInf), GapTable(S, A, H, 0.0),
                           TripletArray<std::uint8_t>(S, A, H, 1)};
    for (int h = 1; h <= H; ++h) {
        const PolicySpace space(mdp, budget, StageRange{1, h - 1}, true);
        auto slots = reduce_ranges(space.size(), jobs, static_cast<std::size_t>(S),
                                   [&](std::uint64_t begin, std::uint64_t end, Extremes& acc) {
            space.for_range(begin, end, [&](const DeterministicPolicy& pi) {
                const VisitationTable vis = visitation_probabilities(mdp, pi);
                for (int s = 0; s < S; ++s) {
                    const double p = vis.state(h, s);
                    if (!(p > kPositiveMass)) continue;
                    acc.pmin[s] = std::min(acc.pmin[s], p);
                    acc.pmax[s] = std::max(acc.pmax[s], p);
                }
            });
        });
        for (std::size_t k = 1; k < slots.size(); ++k) slots[0].merge(slots[k]);
        for (int s = 0; s < S; ++s) {
            if (slots[0].pmin[s] == kInf) continue;
            for (int a : mdp.actions(h, s)) {
                out.p_min(h, s, a) = slots[0].pmin[s];
                out.p_max(h, s, a) = slots[0].pmax[s];
                out.unreachable(h, s, a) = 0;
            }
        }
    }
    return out;
}

GapTable conditional_return_gaps(const Mdp& mdp, EnumerationBudget budget, unsigned jobs) {
    return to_table(mdp, full_enumeration(mdp, budget, jobs).cond);
}

GapTable return_gaps(const Mdp& mdp, EnumerationBudget budget, unsigned jobs) {
    return to_table(mdp, full_enumeration(mdp, budget, jobs).ret);
}

GapReport gap_report(const Mdp& mdp, EnumerationBudget budget, unsigned jobs) {
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    Extremes ex = full_enumeration(mdp, budget, jobs);
    GapReport r;
    r.S = S;
    r.A = A;
    r.H = H;
    r.value_gap = value_gaps(mdp);
    r.return_gap = to_table(mdp, ex.ret);
    r.cond_return_gap = to_table(mdp, ex.cond);
    r.p_min = to_table(mdp, ex.pmin);
    r.p_max = to_table(mdp, ex.pmax);
    r.unreachable = TripletArray<std::uint8_t>(S, A, H, 1);
    r.available = TripletArray<std::uint8_t>(S, A, H, 0);
    for (int h = 1; h <= H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a : mdp.actions(h, s)) {
                r.available(h, s, a) = 1;
                r.unreachable(h, s, a) = r.p_min(h, s, a) == kInf ? 1 : 0;
            }
    return r;
}

OrderingReport check_gap_ordering(const GapReport& r, bool deterministic) {
    OrderingReport out;
    for (int h = 1; h <= r.H; ++h)
        for (int s = 0; s < r.S; ++s)
            for (int a = 0; a < r.A; ++a) {
                if (!r.available(h, s, a)) continue;
                const double cond = r.cond_return_gap(h, s, a);
                const double val = r.value_gap(h, s, a);
                const double ret = r.return_gap(h, s, a);
                const Triplet t{h, s, a};
                if (cond < val - kGapTolerance) out.violations.push_back({t, "cond_return_gap >= value_gap", cond, val});
                if (cond < ret - kGapTolerance)
                    out.violations.push_back({t, "cond_return_gap >= return_gap", cond, ret});
                if (deterministic && cond != ret && !(std::abs(cond - ret) <= kGapTolerance))
                    out.violations.push_back({t, "cond_return_gap == return_gap", cond, ret});
            }
    return out;
}

OrderingReport check_gap_ordering(const Mdp& mdp, EnumerationBudget budget, unsigned jobs) {
    return check_gap_ordering(gap_report(mdp, budget, jobs), mdp.deterministic_transitions());
}

std::string format_number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_gaps_csv(std::ostream& out, const GapReport& r) {
    out << "h,s,a,value_gap,return_gap,cond_return_gap,p_min,p_max,unreachable\n";
    for (int h = 1; h <= r.H; ++h)
        for (int s = 0; s < r.S; ++s)
            for (int a = 0; a < r.A; ++a) {
                if (!r.available(h, s, a)) continue;
                out << h << ',' << s << ',' << a << ',' << format_number(r.value_gap(h, s, a)) << ','
                    << format_number(r.return_gap(h, s, a)) << ','
                    << format_number(r.cond_return_gap(h, s, a)) << ','
                    << format_number(r.p_min(h, s, a)) << ',' << format_number(r.p_max(h, s, a)) << ','
                    << (r.unreachable(h, s, a) ? 1 : 0) << '\n';
            }
}

}  // namespace optpac
