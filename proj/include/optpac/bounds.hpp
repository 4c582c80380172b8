#pragma once

// Closed-form sample-complexity bounds and the helper inequalities used to
// derive them. Inputs are exact oracle outputs; unreachable triplets
// contribute nothing to any sum.

#include <cstdint>
#include <iosfwd>

#include "optpac/oracles.hpp"

namespace optpac {

/// C(eps) = sum H^4 / (p_min max{cond_gap, eps}^2) over reachable triplets.
double c_epsilon(const GapReport& gaps, double epsilon);

struct ExplicitBound {
    double total = 0.0;
    double p_min_global = 0.0;
    GapTable contribution;  // zero for unreachable triplets
};

/// H^4 sum [720 L + 1729 S log(1152 S^2 A H^5 L / (p_min eps^2))] /
/// (p_min(h,s,a) max{cond_gap, eps}^2), L = log(3SAH/delta), p_min in the
/// logarithm the smallest over reachable triplets. Throws std::domain_error
/// if no triplet is reachable.
ExplicitBound explicit_sample_bound(const GapReport& gaps, double delta, double epsilon);

/// 144 C(eps) beta(tau-1, delta) + 1.
double implicit_sample_rhs(std::uint64_t tau, const GapReport& gaps, double delta, double epsilon);
bool implicit_sample_check(std::uint64_t tau, const GapReport& gaps, double delta, double epsilon);

/// 144 H^4 beta(T, delta) / (p_min max{cond_gap, eps}^2) for one triplet;
/// +infinity when unreachable.
double targeting_bound(const GapReport& gaps, int h, int s, int a, std::uint64_t T, double delta, double epsilon);

/// S A H^4 log(1/delta) / eps^2, an order-of-magnitude reference without
/// constants.
double worst_case_bound(int S, int A, int H, double delta, double epsilon);

/// (2/(eps^2 delta)) (36 log(2SAH) + 16 log(17/(eps^2 delta)) + 9 eps^2) + 1.
double t_eps_upper_bound(int S, int A, int H, double epsilon, double delta);

/// S A log(1/(4 delta)) / (16 eps^2); requires delta < 1/4.
double pac_lower_bound(int S, int A, double epsilon, double delta);

/// B log(B^2 + 2C) + C for B, C >= 1.
double solve_log_inequality(double B, double C);

/// 5 log(3SAH/delta) + 4S + 4S log t, t >= 1; an upper bound on beta(t-1).
double beta_upper(double t, int S, int A, int H, double delta);

/// The simplification chain from the implicit inequality to the explicit
/// bound, evaluated on C(eps).
struct BoundChain {
    double c_eps = 0.0;
    double B = 0.0;           // 576 C S
    double C = 0.0;           // 720 C L + 577 C S
    double solved = 0.0;      // solve_log_inequality(B, C)
    double simplified = 0.0;  // 1729 C S log(1152 C S L) + 720 C L
};
BoundChain bound_chain(const GapReport& gaps, double delta, double epsilon);

struct BoundReport {
    double explicit_bound = 0.0;
    double c_epsilon = 0.0;
    double worst_case = 0.0;
    double t_eps_bound = 0.0;
    double pac_lower = 0.0;  // NaN when delta >= 1/4
    double p_min_global = 0.0;
    BoundChain chain;
    GapTable contribution;
};

BoundReport bound_report(const GapReport& gaps, double delta, double epsilon);

/// "bound,value" rows followed by an "h,s,a,contribution" table.
void write_bound_report(std::ostream& out, const BoundReport& report, const GapReport& gaps);

}  // namespace optpac
