#include "optpac/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "optpac/bounds.hpp"
#include "optpac/errors.hpp"
#include "optpac/instances.hpp"
#include "optpac/parallel.hpp"
#include "optpac/ucbvi.hpp"

namespace optpac {

namespace {

constexpr double kEpsilon = 0.2;
constexpr double kDelta = 0.1;
constexpr std::uint64_t kPacSeeds = 100;
constexpr std::uint64_t kPoolSeeds = 500;
constexpr std::uint64_t kLemmaRuns = 50;
constexpr std::size_t kMaxReportedFailures = 20;

enum Which { kDet = 0, kStoch = 1, kTree = 2 };

std::string fmt(double x, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << x;
    return os.str();
}

std::string at(const Triplet& x) {
    return "(h=" + std::to_string(x.h) + ", s=" + std::to_string(x.s) + ", a=" + std::to_string(x.a) + ")";
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void add_failure(CriterionResult& r, std::uint64_t& count, const std::string& what) {
    ++count;
    if (r.failures.size() < kMaxReportedFailures) r.failures.push_back(what);
}

// Plain recursions, independent of the kernels and of the library oracles.
struct NaiveModel {
    int S, A, H, s1;
    std::vector<double> p;  // [h][s][a][s']
    std::vector<double> r;  // [h][s][a]
    std::vector<std::vector<int>> acts;  // [h][s]

    explicit NaiveModel(const Mdp& m)
        : S(m.num_states()), A(m.num_actions()), H(m.horizon()), s1(m.initial_state()) {
        p.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
        r.assign(static_cast<std::size_t>(H) * S * A, 0.0);
        acts.resize(static_cast<std::size_t>(H) * S);
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    if (!m.available(h + 1, s, a)) continue;
                    acts[h * S + s].push_back(a);
                    r[(h * S + s) * A + a] = m.mean_reward(h + 1, s, a);
                    const auto row = m.transition(h + 1, s, a);
                    for (int n = 0; n < S; ++n) p[((h * S + s) * A + a) * S + n] = row[n];
                }
    }
    double P(int h, int s, int a, int n) const { return p[((h * S + s) * A + a) * S + n]; }
    double R(int h, int s, int a) const { return r[(h * S + s) * A + a]; }
    double q(int h, int s, int a, const std::vector<double>& v) const {
        double x = R(h, s, a);
        for (int n = 0; n < S; ++n) x += P(h, s, a, n) * v[(h + 1) * S + n];
        return x;
    }
};

}  // namespace

GapTable naive_conditional_return_gaps(const Mdp& mdp) {
    const NaiveModel m(mdp);
    const int S = m.S, A = m.A, H = m.H;
    std::vector<double> vstar(static_cast<std::size_t>(H + 1) * S, 0.0);
    for (int h = H - 1; h >= 0; --h)
        for (int s = 0; s < S; ++s) {
            double best = -kInf;
            for (int a : m.acts[h * S + s]) best = std::max(best, m.q(h, s, a, vstar));
            vstar[h * S + s] = best;
        }

    GapTable out(S, A, H, kInf);
    std::vector<int> choice(static_cast<std::size_t>(H) * S, 0);
    std::vector<double> v(static_cast<std::size_t>(H + 1) * S, 0.0);
    std::vector<double> reach(static_cast<std::size_t>(H) * S, 0.0);
    for (;;) {
        for (int h = H - 1; h >= 0; --h)
            for (int s = 0; s < S; ++s) v[h * S + s] = m.q(h, s, m.acts[h * S + s][choice[h * S + s]], v);
        std::fill(reach.begin(), reach.end(), 0.0);
        reach[m.s1] = 1.0;
        for (int h = 0; h + 1 < H; ++h)
            for (int s = 0; s < S; ++s) {
                const double mass = reach[h * S + s];
                if (mass == 0.0) continue;
                const int a = m.acts[h * S + s][choice[h * S + s]];
                for (int n = 0; n < S; ++n) reach[(h + 1) * S + n] += mass * m.P(h, s, a, n);
            }
        double worst = -kInf;
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                if (reach[h * S + s] > 1e-12) worst = std::max(worst, vstar[h * S + s] - v[h * S + s]);
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                if (reach[h * S + s] > 1e-12) {
                    double& g = out(h + 1, s, m.acts[h * S + s][choice[h * S + s]]);
                    g = std::min(g, worst);
                }
        std::size_t c = 0;
        for (; c < choice.size(); ++c) {
            if (++choice[c] < static_cast<int>(m.acts[c].size())) break;
            choice[c] = 0;
        }
        if (c == choice.size()) break;
    }
    return out;
}

Mdp acceptance_deterministic_instance() { return random_mdp(3, 2, 3, 1, false); }
Mdp acceptance_stochastic_instance() { return random_mdp(3, 2, 3, 0, true); }
Mdp acceptance_tree_instance(bool bernoulli) {
    TreeSpec spec;
    spec.delta = kEpsilon;
    spec.bernoulli = bernoulli;
    return tree_mdp(spec);
}

AcceptanceSuite::AcceptanceSuite(unsigned jobs, std::ostream* log) : jobs_(jobs), log_(log) {}

void AcceptanceSuite::note(const std::string& line) {
    if (log_) *log_ << "  .. " << line << std::endl;
}

const AcceptanceSuite::Instance& AcceptanceSuite::instance(int which) {
    auto it = instances_.find(which);
    if (it != instances_.end()) return it->second;
    Instance inst{"", acceptance_deterministic_instance(), BonusRule::Stochastic, {}};
    if (which == kDet) {
        inst.name = "deterministic S=3 A=2 H=3";
    } else if (which == kStoch) {
        inst.name = "stochastic S=3 A=2 H=3";
        inst.mdp = acceptance_stochastic_instance();
    } else {
        inst.name = "tree S=8 A=3 H=4";
        inst.mdp = acceptance_tree_instance(true);
        inst.rule = BonusRule::Deterministic;
    }
    inst.oracles = make_run_oracles(inst.mdp);
    if (!inst.oracles.gaps) throw ConsistencyError("gap oracles exceed the budget on " + inst.name);
    return instances_.emplace(which, std::move(inst)).first->second;
}

namespace {

std::vector<AcceptanceSuite::PooledRun> run_batch(const std::string& name, const Mdp& mdp, const RunOracles& oracles,
                                                  int which, const std::vector<std::uint64_t>& seeds,
                                                  const std::vector<RunConfig>& cfgs, unsigned jobs) {
    std::vector<AcceptanceSuite::PooledRun> out(seeds.size());
    parallel_for(seeds.size(), jobs, [&](std::size_t k) {
        Rng rng(derive_seed({kAcceptanceSeed, static_cast<std::uint64_t>(which), seeds[k]}));
        out[k] = {name, seeds[k], run(mdp, kEpsilon, kDelta, cfgs[k], rng, &oracles)};
    });
    return out;
}

RunConfig diagnostic_config(bool lemmas) {
    RunConfig cfg;
    cfg.diagnostics = true;
    cfg.lemma_checks = lemmas;
    return cfg;
}

}  // namespace

const std::vector<AcceptanceSuite::PooledRun>& AcceptanceSuite::stochastic_pool() {
    if (pool_) return *pool_;
    const Instance& inst = instance(kStoch);
    std::vector<std::uint64_t> seeds;
    std::vector<RunConfig> cfgs;
    for (std::uint64_t s = 0; s < kPoolSeeds; ++s) {
        seeds.push_back(s);
        cfgs.push_back(diagnostic_config(s < kLemmaRuns));
    }
    Timer t;
    pool_ = run_batch(inst.name, inst.mdp, inst.oracles, kStoch, seeds, cfgs, jobs_);
    note(std::to_string(kPoolSeeds) + " diagnostic runs on the " + inst.name + " instance in " + fmt(t.seconds()) +
         " s");
    return *pool_;
}

const std::vector<AcceptanceSuite::PooledRun>& AcceptanceSuite::pac_runs(int which) {
    auto it = pac_runs_.find(which);
    if (it != pac_runs_.end()) return it->second;
    std::vector<PooledRun> runs;
    if (which == kStoch) {
        const auto& pool = stochastic_pool();
        runs.assign(pool.begin(), pool.begin() + kPacSeeds);
    } else {
        const Instance& inst = instance(which);
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t s = 0; s < kPacSeeds; ++s) seeds.push_back(s);
        RunConfig cfg;
        cfg.rule = inst.rule;
        Timer t;
        runs = run_batch(inst.name, inst.mdp, inst.oracles, which, seeds, std::vector<RunConfig>(kPacSeeds, cfg),
                         jobs_);
        note(std::to_string(kPacSeeds) + " runs on the " + inst.name + " instance (" + to_string(inst.rule) +
             " bonus) in " + fmt(t.seconds()) + " s");
    }
    return pac_runs_.emplace(which, std::move(runs)).first->second;
}

const std::vector<AcceptanceSuite::PooledRun>& AcceptanceSuite::lemma_runs() {
    if (lemma_runs_) return *lemma_runs_;
    std::vector<PooledRun> runs;
    for (const PooledRun& r : stochastic_pool())
        if (r.seed < kLemmaRuns && r.result.good_event.holds()) runs.push_back(r);
    const Instance& inst = instance(kStoch);
    std::uint64_t next = kPoolSeeds;
    while (runs.size() < kLemmaRuns && next < kPoolSeeds + 4 * kLemmaRuns) {
        auto extra = run_batch(inst.name, inst.mdp, inst.oracles, kStoch, {next}, {diagnostic_config(true)}, 1);
        ++next;
        if (extra.front().result.good_event.holds()) runs.push_back(std::move(extra.front()));
    }
    lemma_runs_ = std::move(runs);
    return *lemma_runs_;
}

namespace {

std::string joined(const std::ostringstream& parts) {
    std::string s = parts.str();
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "; ") == 0) s.resize(s.size() - 2);
    return s;
}

}  // namespace

CriterionResult AcceptanceSuite::pac_correctness() {
    Timer timer;
    CriterionResult r{1, "PAC correctness", true, "", {}, 0.0};
    std::ostringstream detail;
    std::uint64_t failures = 0;
    for (int which : {kDet, kStoch, kTree}) {
        const auto& runs = pac_runs(which);
        std::uint64_t ok = 0, truncated = 0;
        for (const PooledRun& run : runs) {
            if (run.result.success) ++ok;
            if (run.result.truncated) ++truncated;
        }
        const double rate = static_cast<double>(ok) / static_cast<double>(runs.size());
        detail << instance(which).name << ": success " << ok << "/" << runs.size();
        if (truncated) detail << " (" << truncated << " truncated)";
        detail << "; ";
        if (rate < 1.0 - kDelta - 0.05) {
            r.pass = false;
            add_failure(r, failures,
                        "bpi_ucrl: success rate " + fmt(rate) + " < 0.85 on " + instance(which).name);
        }
    }
    r.detail = joined(detail);
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::gap_ordering() {
    Timer timer;
    CriterionResult r{2, "gap ordering on random MDPs", true, "", {}, 0.0};
    constexpr std::size_t kPerKind = 200;
    struct Outcome {
        std::string label;
        std::vector<std::string> violations;
        double min_margin = kInf;
    };
    std::vector<Outcome> outcomes(2 * kPerKind);
    parallel_for(outcomes.size(), jobs_, [&](std::size_t k) {
        const bool stochastic = k < kPerKind;
        const std::uint64_t id = k % kPerKind;
        Rng dims(derive_seed({kAcceptanceSeed, 2, stochastic, id}));
        const int S = 2 + static_cast<int>(dims() % 3);
        const int A = 2 + static_cast<int>(dims() % 2);
        const int H = 2 + static_cast<int>(dims() % 2);
        const std::uint64_t seed = dims();
        const Mdp mdp = random_mdp(S, A, H, seed, stochastic);
        Outcome& o = outcomes[k];
        o.label = std::string(stochastic ? "stochastic" : "deterministic") + " #" + std::to_string(id) + " (S=" +
                  std::to_string(S) + " A=" + std::to_string(A) + " H=" + std::to_string(H) + ")";
        const GapReport rep = gap_report(mdp);
        for (const GapViolation& v : check_gap_ordering(rep, !stochastic).violations)
            o.violations.push_back("exact_oracles: " + v.relation + " at " + at(v.where) + " lhs=" +
                                   format_number(v.lhs) + " rhs=" + format_number(v.rhs) + " on " + o.label);
    });
    std::uint64_t failures = 0;
    for (const Outcome& o : outcomes)
        for (const std::string& v : o.violations) add_failure(r, failures, v);
    r.pass = failures == 0;
    r.detail = std::to_string(kPerKind) + " stochastic + " + std::to_string(kPerKind) + " deterministic MDPs, " +
               std::to_string(failures) + " violations";
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::bound_dominance() {
    Timer timer;
    CriterionResult r{3, "bound dominance", true, "", {}, 0.0};
    std::uint64_t failures = 0, completed = 0;
    std::ostringstream detail;
    for (int which : {kDet, kStoch, kTree}) {
        const Instance& inst = instance(which);
        const GapReport& gaps = *inst.oracles.gaps;
        const double bound = explicit_sample_bound(gaps, kDelta, kEpsilon).total;
        double min_ratio = kInf, min_implicit_ratio = kInf;
        std::uint64_t max_tau = 0;
        for (const PooledRun& run : pac_runs(which)) {
            if (run.result.truncated) continue;
            ++completed;
            const std::uint64_t tau = run.result.tau;
            max_tau = std::max(max_tau, tau);
            const double rhs = implicit_sample_rhs(tau, gaps, kDelta, kEpsilon);
            min_ratio = std::min(min_ratio, bound / static_cast<double>(tau));
            min_implicit_ratio = std::min(min_implicit_ratio, rhs / static_cast<double>(tau));
            if (static_cast<double>(tau) > bound)
                add_failure(r, failures, "bounds_calc: tau=" + std::to_string(tau) + " > explicit bound " +
                                             fmt(bound) + " on " + inst.name + ", seed " + std::to_string(run.seed));
            if (!implicit_sample_check(tau, gaps, kDelta, kEpsilon))
                add_failure(r, failures, "bounds_calc: implicit inequality fails at tau=" + std::to_string(tau) +
                                             " on " + inst.name + ", seed " + std::to_string(run.seed));
        }
        detail << inst.name << ": max tau " << max_tau << ", explicit " << fmt(bound) << " (looseness >= "
               << fmt(min_ratio, 3) << "x, implicit >= " << fmt(min_implicit_ratio, 3) << "x); ";
    }
    r.pass = failures == 0;
    r.detail = std::to_string(completed) + " completed runs; " + joined(detail);
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::targeting() {
    Timer timer;
    CriterionResult r{4, "targeting diagnostics", true, "", {}, 0.0};
    const Instance& inst = instance(kStoch);
    const GapReport& gaps = *inst.oracles.gaps;
    const auto& runs = lemma_runs();
    std::uint64_t failures = 0;
    double max_ratio = 0.0;
    for (const PooledRun& run : runs) {
        const RunResult& res = run.result;
        const std::string where = " on " + inst.name + ", seed " + std::to_string(run.seed);
        const std::uint64_t z_total = res.targeted_total();
        if (res.tau > z_total + 1)
            add_failure(r, failures, "bpi_ucrl: tau=" + std::to_string(res.tau) + " > sum Z + 1 = " +
                                         std::to_string(z_total + 1) + where);
        const std::uint64_t T = res.tau == 0 ? 0 : res.tau - 1;
        for (int h = 1; h <= gaps.H; ++h)
            for (int s = 0; s < gaps.S; ++s)
                for (int a = 0; a < gaps.A; ++a) {
                    const std::uint64_t z = res.targeted(h, s, a);
                    if (!gaps.reachable(h, s, a)) {
                        if (z != 0)
                            add_failure(r, failures, "bpi_ucrl: unreachable triplet " + at({h, s, a}) +
                                                         " targeted " + std::to_string(z) + " times" + where);
                        continue;
                    }
                    const double bound = targeting_bound(gaps, h, s, a, T, kDelta, kEpsilon);
                    max_ratio = std::max(max_ratio, static_cast<double>(z) / bound);
                    if (static_cast<double>(z) > bound)
                        add_failure(r, failures, "bpi_ucrl: Z=" + std::to_string(z) + " > " + fmt(bound) + " at " +
                                                     at({h, s, a}) + where);
                }
    }
    if (runs.size() < kLemmaRuns)
        add_failure(r, failures, "bpi_ucrl: only " + std::to_string(runs.size()) + " good-event runs available");
    r.pass = failures == 0;
    r.detail = std::to_string(runs.size()) + " good-event runs, max Z/bound " + fmt(max_ratio, 3);
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::good_event_frequency() {
    Timer timer;
    CriterionResult r{5, "good-event frequency", true, "", {}, 0.0};
    std::uint64_t bad = 0, rew = 0, trans = 0, cnt = 0, failures = 0;
    const auto& pool = stochastic_pool();
    for (const PooledRun& run : pool) {
        const GoodEventLog& log = run.result.good_event;
        if (log.holds()) continue;
        ++bad;
        rew += log.reward_failures > 0;
        trans += log.transition_failures > 0;
        cnt += log.count_failures > 0;
    }
    const double rate = static_cast<double>(bad) / static_cast<double>(pool.size());
    if (rate > 0.15)
        add_failure(r, failures, "bpi_ucrl: good-event violation rate " + fmt(rate) + " > 0.15 on " +
                                     instance(kStoch).name);
    r.pass = failures == 0;
    r.detail = std::to_string(bad) + "/" + std::to_string(pool.size()) + " runs violated (reward " +
               std::to_string(rew) + ", transition " + std::to_string(trans) + ", count " + std::to_string(cnt) +
               ")";
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::lemma_checks() {
    Timer timer;
    CriterionResult r{6, "lemma-level numeric checks", true, "", {}, 0.0};
    std::uint64_t failures = 0;

    // beta_upper(t) >= beta(t - 1) on S in [2, 16] x t log-spaced on [1, 1e6].
    constexpr int kA = 3, kH = 4;
    constexpr int kTPoints = 667;
    std::uint64_t grid = 0;
    double min_slack = kInf;
    for (int S = 2; S <= 16; ++S)
        for (int i = 0; i < kTPoints; ++i) {
            const double t = std::pow(10.0, 6.0 * i / (kTPoints - 1));
            const double b = threshold_beta(t - 1.0, kDelta, S, kA, kH);
            const double u = beta_upper(t, S, kA, kH, kDelta);
            ++grid;
            min_slack = std::min(min_slack, u / b);
            if (u < b)
                add_failure(r, failures, "bounds_calc: beta_upper " + fmt(u, 10) + " < beta " + fmt(b, 10) +
                                             " at S=" + std::to_string(S) + ", t=" + fmt(t, 10));
        }

    // solve_log_inequality >= largest root of k = B log k + C.
    std::uint64_t log_grid = 0;
    double min_log_slack = kInf;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            const double B = std::pow(10.0, 6.0 * i / 99.0);
            const double C = std::pow(10.0, 6.0 * j / 99.0);
            const double x = solve_log_inequality(B, C);
            double k = x;
            for (int it = 0; it < 10000; ++it) {
                const double next = B * std::log(k) + C;
                if (std::abs(next - k) <= 1e-14 * k) {
                    k = next;
                    break;
                }
                k = next;
            }
            ++log_grid;
            min_log_slack = std::min(min_log_slack, x / k);
            if (x < k * (1.0 - 1e-12))
                add_failure(r, failures, "bounds_calc: solve_log_inequality(" + fmt(B, 10) + ", " + fmt(C, 10) +
                                             ") = " + fmt(x, 12) + " below fixed point " + fmt(k, 12));
        }

    // Per-episode checks on the diagnostic good-event runs.
    std::uint64_t episodes = 0, stop = 0, value = 0, optimism = 0;
    for (const PooledRun& run : lemma_runs()) {
        const LemmaChecks& l = run.result.lemmas;
        episodes += l.episodes;
        stop += l.stopping_gap_failures;
        value += l.value_gap_failures;
        optimism += l.optimism_failures;
        if (l.stopping_gap_failures || l.value_gap_failures || l.optimism_failures)
            add_failure(r, failures, "bpi_ucrl: " + l.first_failure + " on " + run.instance + ", seed " +
                                         std::to_string(run.seed));
    }
    r.pass = failures == 0;
    r.detail = std::to_string(grid) + " beta points (min ratio " + fmt(min_slack) + "), " + std::to_string(log_grid) +
               " log-inequality points (min ratio " + fmt(min_log_slack) + "), " + std::to_string(episodes) +
               " diagnostic episodes: stopping-gap " + std::to_string(stop) + ", value-gap " + std::to_string(value) +
               ", optimism " + std::to_string(optimism) + " failures";
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::regret_separation() {
    Timer timer;
    CriterionResult r{7, "regret vs identification separation", true, "", {}, 0.0};
    constexpr int S = 8, A = 3, H = 4;
    constexpr std::uint64_t kSeeds = 50;
    constexpr double kSmallDelta = 0.001;
    const Mdp mdp = acceptance_tree_instance(false);
    const double bound = t_eps_upper_bound(S, A, H, kEpsilon, kDelta);
    const auto t_max = static_cast<std::uint64_t>(std::ceil(2.0 * bound));
    const TEpsilonResult m = measure_t_epsilon(mdp, kEpsilon, kDelta, t_max, kSeeds, kAcceptanceSeed, jobs_);
    std::uint64_t failures = 0;
    const auto show = [](const std::optional<std::uint64_t>& x) { return x ? std::to_string(*x) : std::string("none"); };

    if (!m.sustained || static_cast<double>(*m.sustained) > bound)
        add_failure(r, failures, "ucbvi_regret: measured T_eps " + show(m.sustained) + " > bound " + fmt(bound) +
                                     " (last above threshold at T=" + std::to_string(m.last_above) + ")");

    // The learner does not depend on delta: rescan the same curve.
    const TEpsilonResult small = t_epsilon_from_curve(m.mean_cumulative, kSeeds, kEpsilon, kSmallDelta);
    const double lower = pac_lower_bound(S, A, kEpsilon, kSmallDelta);
    if (!small.sustained || lower < 2.0 * static_cast<double>(*small.sustained))
        add_failure(r, failures, "ucbvi_regret: at delta=0.001 lower bound " + fmt(lower) + " < 2 x measured T_eps " +
                                     (small.sustained ? std::to_string(*small.sustained)
                                                      : "> " + std::to_string(small.horizon)) +
                                     " (mean average regret " + fmt(small.mean_average(std::min<std::uint64_t>(
                                                                    small.horizon, static_cast<std::uint64_t>(lower / 2)))) +
                                     " at T=lower/2, threshold " + fmt(small.threshold) + ")");
    r.pass = failures == 0;
    r.detail = "delta=0.1: T_eps " + show(m.sustained) + " (first crossing " + show(m.first_crossing) +
               ") vs bound " + fmt(bound) + ", horizon " + std::to_string(t_max) +
               ", final mean average regret " + fmt(m.mean_average(t_max)) + "; delta=0.001: T_eps " +
               show(small.sustained) + " (first crossing " + show(small.first_crossing) + ", last above " +
               std::to_string(small.last_above) + ") vs lower bound " + fmt(lower);
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::oracle_cross_validation() {
    Timer timer;
    CriterionResult r{8, "oracle cross-validation", true, "", {}, 0.0};
    std::uint64_t failures = 0;
    constexpr std::uint64_t kEpisodes = 1'000'000;
    const Mdp& mdp = instance(kStoch).mdp;
    const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const std::vector<std::pair<std::string, DeterministicPolicy>> policies = {
        {"optimal policy", instance(kStoch).oracles.optimal.policy}, {"first-action policy", first_available_policy(mdp)}};
    double worst_z = 0.0;
    std::uint64_t comparisons = 0;
    for (std::size_t k = 0; k < policies.size(); ++k) {
        const auto& [name, pi] = policies[k];
        const ValueTable v = evaluate_policy(mdp, pi);
        const VisitationTable vis = visitation_probabilities(mdp, pi);
        Rng rng(derive_seed({kAcceptanceSeed, 8, k}));
        TripletArray<std::uint64_t> hits(S, A, H, 0);
        double sum = 0.0, sum2 = 0.0;
        Trajectory traj;
        for (std::uint64_t e = 0; e < kEpisodes; ++e) {
            sample_episode(mdp, pi, rng, traj);
            double ret = 0.0;
            for (int h = 1; h <= H; ++h) {
                ret += traj.rewards[h - 1];
                ++hits(h, traj.states[h - 1], traj.actions[h - 1]);
            }
            sum += ret;
            sum2 += ret * ret;
        }
        const double n = static_cast<double>(kEpisodes);
        const auto compare = [&](double exact, double mean, double sd, const std::string& what) {
            ++comparisons;
            const double se = sd / std::sqrt(n);
            const double err = std::abs(mean - exact);
            if (se == 0.0) {
                if (err > 1e-12) add_failure(r, failures, "mdp_core: " + what + " exact " + format_number(exact) +
                                                              " vs Monte-Carlo " + format_number(mean) + " (" + name + ")");
                return;
            }
            worst_z = std::max(worst_z, err / se);
            if (err > 3.0 * se)
                add_failure(r, failures, "mdp_core: " + what + " exact " + format_number(exact) + " vs Monte-Carlo " +
                                             format_number(mean) + " +- " + fmt(se) + " (" + name + ")");
        };
        const double mean = sum / n;
        compare(v.v(1, mdp.initial_state()), mean, std::sqrt(std::max(0.0, sum2 / n - mean * mean)), "V_1(s1)");
        for (int h = 1; h <= H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    if (!mdp.available(h, s, a)) continue;
                    const double f = static_cast<double>(hits(h, s, a)) / n;
                    compare(vis.pair(h, s, a), f, std::sqrt(f * (1.0 - f)), "visitation " + at({h, s, a}));
                }
    }

    constexpr std::uint64_t kNaive = 20;
    std::uint64_t naive_failures = 0;
    for (std::uint64_t id = 0; id < kNaive; ++id) {
        Rng dims(derive_seed({kAcceptanceSeed, 8, 100 + id}));
        const int Si = 2 + static_cast<int>(dims() % 2);
        const int Ai = 2 + static_cast<int>(dims() % 2);
        const int Hi = 2 + static_cast<int>(dims() % 2);
        const bool stochastic = id % 2 == 0;
        const Mdp m = random_mdp(Si, Ai, Hi, dims(), stochastic);
        const GapTable lib = conditional_return_gaps(m);
        const GapTable ref = naive_conditional_return_gaps(m);
        for (int h = 1; h <= Hi; ++h)
            for (int s = 0; s < Si; ++s)
                for (int a = 0; a < Ai; ++a) {
                    const double x = lib(h, s, a), y = ref(h, s, a);
                    const bool same = (std::isinf(x) && std::isinf(y)) || std::abs(x - y) <= 1e-12;
                    if (!same) {
                        ++naive_failures;
                        add_failure(r, failures, "exact_oracles: cond_return_gap " + format_number(x) +
                                                     " vs naive " + format_number(y) + " at " + at({h, s, a}) +
                                                     " on instance #" + std::to_string(id));
                    }
                }
    }
    r.pass = failures == 0;
    r.detail = std::to_string(comparisons) + " Monte-Carlo comparisons (max |z| " + fmt(worst_z, 3) + "), " +
               std::to_string(kNaive) + " naive-enumeration instances (" + std::to_string(naive_failures) +
               " mismatches)";
    r.seconds = timer.seconds();
    return r;
}

CriterionResult AcceptanceSuite::run(int id) {
    CriterionResult r;
    try {
        switch (id) {
            case 1: r = pac_correctness(); break;
            case 2: r = gap_ordering(); break;
            case 3: r = bound_dominance(); break;
            case 4: r = targeting(); break;
            case 5: r = good_event_frequency(); break;
            case 6: r = lemma_checks(); break;
            case 7: r = regret_separation(); break;
            case 8: r = oracle_cross_validation(); break;
            default: throw ConfigError("no criterion " + std::to_string(id));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        r = {id, "criterion " + std::to_string(id), false, "", {std::string("error: ") + e.what()}, 0.0};
    }
    return r;
}

std::vector<CriterionResult> AcceptanceSuite::run(const std::vector<int>& ids) {
    std::vector<CriterionResult> out;
    for (int id : ids) {
        out.push_back(run(id));
        if (log_) print_criteria(*log_, {out.back()});
    }
    return out;
}

std::vector<int> suite_criteria(const std::string& suite) {
    if (suite == "pac") return {1};
    if (suite == "gaps") return {2};
    if (suite == "bounds") return {3};
    if (suite == "targeting") return {4};
    if (suite == "goodevent") return {5};
    if (suite == "lemmas") return {6};
    if (suite == "regret") return {7};
    if (suite == "oracles") return {8};
    if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8};
    throw ConfigError("unknown suite '" + suite +
                      "' (expected gaps, pac, bounds, targeting, goodevent, lemmas, regret, oracles or all)");
}

void print_criteria(std::ostream& out, const std::vector<CriterionResult>& results) {
    for (const CriterionResult& r : results) {
        out << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail << " ("
            << std::fixed << std::setprecision(1) << r.seconds << " s)" << std::defaultfloat << "\n";
        for (const std::string& f : r.failures) out << "       " << f << "\n";
    }
    out.flush();
}

}  // namespace optpac
