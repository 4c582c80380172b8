#pragma once

// Exact instance-dependent quantities by dynamic programming and bounded
// brute-force enumeration of deterministic policies.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "optpac/mdp.hpp"

namespace optpac {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct EnumerationBudget {
    unsigned long long max_policies = 10'000'000ULL;
};

/// Inclusive stage range [first, last].
struct StageRange {
    int first = 1;
    int last = 1;
};

/// Dense (h, s, a) indexed array, stage-major like Mdp::triplet.
template <class T>
class TripletArray {
public:
    TripletArray() = default;
    TripletArray(int S, int A, int H, T fill = T{})
        : S_(S), A_(A), H_(H), data_(static_cast<std::size_t>(H) * S * A, fill) {}

    T& operator()(int h, int s, int a) { return data_[index(h, s, a)]; }
    const T& operator()(int h, int s, int a) const { return data_[index(h, s, a)]; }
    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }
    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int horizon() const { return H_; }

private:
    std::size_t index(int h, int s, int a) const {
        return (static_cast<std::size_t>(h - 1) * S_ + s) * A_ + a;
    }
    int S_ = 0, A_ = 0, H_ = 0;
    std::vector<T> data_;
};

using GapTable = TripletArray<double>;

/// Unreachable triplets (including unavailable actions) carry +infinity in
/// p_min, return_gap and cond_return_gap.
struct GapReport {
    int S = 0, A = 0, H = 0;
    GapTable value_gap;
    GapTable return_gap;
    GapTable cond_return_gap;
    GapTable p_min;
    GapTable p_max;
    TripletArray<std::uint8_t> unreachable;
    TripletArray<std::uint8_t> available;

    bool reachable(int h, int s, int a) const { return !unreachable(h, s, a); }
    /// Smallest p_min over reachable triplets; +infinity if there are none.
    double global_p_min() const;
};

/// Mixed-radix enumeration of deterministic policies over a set of (h, s)
/// cells; every other cell is fixed to its lowest available action.
class PolicySpace {
public:
    /// `stages` restricts the free cells to a stage range. With
    /// `reachable_only`, cells no policy can reach are fixed as well; this does
    /// not change any quantity measured from the initial state.
    PolicySpace(const Mdp& mdp, EnumerationBudget budget, std::optional<StageRange> stages = std::nullopt,
                bool reachable_only = false);

    std::uint64_t size() const { return size_; }
    /// Policy with the given mixed-radix index (first free cell varies fastest).
    void decode(std::uint64_t index, DeterministicPolicy& out) const;
    /// Next policy in index order; false after the last one.
    bool advance(DeterministicPolicy& pi) const;

    /// Calls fn(policy) for each index in [begin, end).
    template <class Fn>
    void for_range(std::uint64_t begin, std::uint64_t end, Fn&& fn) const {
        if (begin >= end) return;
        DeterministicPolicy pi;
        decode(begin, pi);
        for (std::uint64_t i = begin; i < end; ++i) {
            fn(static_cast<const DeterministicPolicy&>(pi));
            advance(pi);
        }
    }

private:
    struct Cell {
        int h, s;
        std::vector<int> actions;
    };
    const Mdp* mdp_;
    std::vector<Cell> cells_;
    DeterministicPolicy base_;
    std::uint64_t size_ = 1;
};

/// Product of mask sizes over the free cells, as a floating count.
long double count_policies(const Mdp& mdp, std::optional<StageRange> stages = std::nullopt,
                           bool reachable_only = false);

/// Every policy over the chosen cells. Throws BudgetExceeded.
std::vector<DeterministicPolicy> enumerate_policies(const Mdp& mdp, EnumerationBudget budget,
                                                    std::optional<StageRange> stages = std::nullopt);

/// V*_h(s) - Q*_h(s, a); +infinity for unavailable actions.
GapTable value_gaps(const Mdp& mdp);

struct VisitationExtremes {
    GapTable p_min;
    GapTable p_max;
    TripletArray<std::uint8_t> unreachable;
};

/// Per stage h, enumerates only the actions of stages 1..h-1.
VisitationExtremes min_max_visitation(const Mdp& mdp, EnumerationBudget budget = {}, unsigned jobs = 1);

GapTable conditional_return_gaps(const Mdp& mdp, EnumerationBudget budget = {}, unsigned jobs = 1);
GapTable return_gaps(const Mdp& mdp, EnumerationBudget budget = {}, unsigned jobs = 1);

/// All quantities from one full enumeration. `p_min`/`p_max` come from the
/// full enumeration as well.
GapReport gap_report(const Mdp& mdp, EnumerationBudget budget = {}, unsigned jobs = 1);

struct GapViolation {
    Triplet where;
    std::string relation;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct OrderingReport {
    std::vector<GapViolation> violations;
    bool ok() const { return violations.empty(); }
};

inline constexpr double kGapTolerance = 1e-9;

/// cond_return_gap >= value_gap and cond_return_gap >= return_gap, with
/// equality of the latter two for deterministic transitions.
OrderingReport check_gap_ordering(const GapReport& report, bool deterministic);
OrderingReport check_gap_ordering(const Mdp& mdp, EnumerationBudget budget = {}, unsigned jobs = 1);

/// Columns h,s,a,value_gap,return_gap,cond_return_gap,p_min,p_max,unreachable
/// for available triplets; +infinity is written as "inf".
void write_gaps_csv(std::ostream& out, const GapReport& report);

/// Shortest round-trip decimal, or "inf".
std::string format_number(double x);

}  // namespace optpac
