#include "optpac/bounds.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "optpac/bpi_ucrl.hpp"

namespace optpac {

namespace {

double pow4(double x) { return x * x * x * x; }

double denominator(const GapReport& g, int h, int s, int a, double epsilon) {
    const double gap = std::max(g.cond_return_gap(h, s, a), epsilon);
    return g.p_min(h, s, a) * gap * gap;
}

template <class Fn>
void for_reachable(const GapReport& g, Fn&& fn) {
    for (int h = 1; h <= g.H; ++h)
        for (int s = 0; s < g.S; ++s)
            for (int a = 0; a < g.A; ++a)
                if (g.available(h, s, a) && !g.unreachable(h, s, a)) fn(h, s, a);
}

void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0)) throw std::domain_error("epsilon must be positive");
}

}  // namespace

double c_epsilon(const GapReport& g, double epsilon) {
    check_epsilon(epsilon);
    const double h4 = pow4(g.H);
    double total = 0.0;
    for_reachable(g, [&](int h, int s, int a) { total += h4 / denominator(g, h, s, a, epsilon); });
    return total;
}

ExplicitBound explicit_sample_bound(const GapReport& g, double delta, double epsilon) {
    check_epsilon(epsilon);
    ExplicitBound out;
    out.p_min_global = g.global_p_min();
    if (std::isinf(out.p_min_global)) throw std::domain_error("no reachable triplet");
    const double S = g.S, A = g.A, H = g.H;
    const double L = log_confidence(g.S, g.A, g.H, delta);
    const double numerator =
        720.0 * L + 1729.0 * S * std::log(1152.0 * S * S * A * std::pow(H, 5) / (out.p_min_global * epsilon * epsilon) * L);
    out.contribution = GapTable(g.S, g.A, g.H, 0.0);
    const double h4 = pow4(H);
    for_reachable(g, [&](int h, int s, int a) {
        const double c = h4 * numerator / denominator(g, h, s, a, epsilon);
        out.contribution(h, s, a) = c;
        out.total += c;
    });
    return out;
}

double implicit_sample_rhs(std::uint64_t tau, const GapReport& g, double delta, double epsilon) {
    if (tau < 1) throw std::domain_error("stopping time must be at least 1");
    const double beta = threshold_beta(static_cast<double>(tau - 1), delta, g.S, g.A, g.H);
    return 144.0 * c_epsilon(g, epsilon) * beta + 1.0;
}

bool implicit_sample_check(std::uint64_t tau, const GapReport& g, double delta, double epsilon) {
    return static_cast<double>(tau) <= implicit_sample_rhs(tau, g, delta, epsilon);
}

double targeting_bound(const GapReport& g, int h, int s, int a, std::uint64_t T, double delta, double epsilon) {
    check_epsilon(epsilon);
    if (!g.available(h, s, a) || g.unreachable(h, s, a)) return kInf;
    const double beta = threshold_beta(static_cast<double>(T), delta, g.S, g.A, g.H);
    return 144.0 * pow4(g.H) * beta / denominator(g, h, s, a, epsilon);
}

double worst_case_bound(int S, int A, int H, double delta, double epsilon) {
    check_epsilon(epsilon);
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
    return static_cast<double>(S) * A * pow4(H) * std::log(1.0 / delta) / (epsilon * epsilon);
}

double t_eps_upper_bound(int S, int A, int H, double epsilon, double delta) {
    check_epsilon(epsilon);
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
    const double e2 = epsilon * epsilon;
    return 2.0 / (e2 * delta) *
               (36.0 * std::log(2.0 * S * A * H) + 16.0 * std::log(17.0 / (e2 * delta)) + 9.0 * e2) +
           1.0;
}

double pac_lower_bound(int S, int A, double epsilon, double delta) {
    check_epsilon(epsilon);
    if (!(delta > 0.0 && delta < 0.25)) throw std::domain_error("the lower bound needs 0 < delta < 1/4");
    return static_cast<double>(S) * A * std::log(1.0 / (4.0 * delta)) / (16.0 * epsilon * epsilon);
}

double solve_log_inequality(double B, double C) {
    if (!(B >= 1.0 && C >= 1.0)) throw std::domain_error("solve_log_inequality needs B, C >= 1");
    return B * std::log(B * B + 2.0 * C) + C;
}

double beta_upper(double t, int S, int A, int H, double delta) {
    if (!(t >= 1.0)) throw std::domain_error("beta_upper needs t >= 1");
    return 5.0 * log_confidence(S, A, H, delta) + 4.0 * S + 4.0 * S * std::log(t);
}

BoundChain bound_chain(const GapReport& g, double delta, double epsilon) {
    BoundChain c;
    const double S = g.S;
    const double L = log_confidence(g.S, g.A, g.H, delta);
    c.c_eps = c_epsilon(g, epsilon);
    c.B = 576.0 * c.c_eps * S;
    c.C = 720.0 * c.c_eps * L + 577.0 * c.c_eps * S;
    c.solved = solve_log_inequality(c.B, c.C);
    c.simplified = 1729.0 * c.c_eps * S * std::log(1152.0 * c.c_eps * S * L) + 720.0 * c.c_eps * L;
    return c;
}

BoundReport bound_report(const GapReport& g, double delta, double epsilon) {
    BoundReport r;
    const ExplicitBound e = explicit_sample_bound(g, delta, epsilon);
    r.explicit_bound = e.total;
    r.p_min_global = e.p_min_global;
    r.contribution = e.contribution;
    r.c_epsilon = c_epsilon(g, epsilon);
    r.worst_case = worst_case_bound(g.S, g.A, g.H, delta, epsilon);
    r.t_eps_bound = t_eps_upper_bound(g.S, g.A, g.H, epsilon, delta);
    r.pac_lower = delta < 0.25 ? pac_lower_bound(g.S, g.A, epsilon, delta)
                               : std::numeric_limits<double>::quiet_NaN();
    r.chain = bound_chain(g, delta, epsilon);
    return r;
}

void write_bound_report(std::ostream& out, const BoundReport& r, const GapReport& g) {
    out << "bound,value\n";
    out << "explicit_bound," << format_number(r.explicit_bound) << '\n';
    out << "c_epsilon," << format_number(r.c_epsilon) << '\n';
    out << "p_min_global," << format_number(r.p_min_global) << '\n';
    out << "chain_solved," << format_number(r.chain.solved) << '\n';
    out << "chain_simplified," << format_number(r.chain.simplified) << '\n';
    out << "worst_case_order," << format_number(r.worst_case) << '\n';
    out << "t_eps_bound," << format_number(r.t_eps_bound) << '\n';
    out << "pac_lower_bound," << (std::isnan(r.pac_lower) ? std::string("nan") : format_number(r.pac_lower)) << '\n';
    out << '\n' << "h,s,a,contribution\n";
    for (int h = 1; h <= g.H; ++h)
        for (int s = 0; s < g.S; ++s)
            for (int a = 0; a < g.A; ++a)
                if (g.available(h, s, a))
                    out << h << ',' << s << ',' << a << ',' << format_number(r.contribution(h, s, a)) << '\n';
}

}  // namespace optpac
