// optpac command-line front end.
//
// Exit status: 0 pass, 1 invariant failure, 2 configuration error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "optpac/acceptance.hpp"
#include "optpac/bounds.hpp"
#include "optpac/bpi_ucrl.hpp"
#include "optpac/errors.hpp"
#include "optpac/harness.hpp"
#include "optpac/instances.hpp"
#include "optpac/mdp_io.hpp"
#include "optpac/oracles.hpp"
#include "optpac/ucbvi.hpp"

namespace fs = std::filesystem;
using namespace optpac;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitConfig = 2;

struct Globals {
    std::string out_dir = ".";
    unsigned jobs = 1;
    std::uint64_t seed = 0;
};

struct InstanceOptions {
    std::string mdp_file;
    std::vector<double> tree;        // S A H gap
    std::vector<std::uint64_t> random;  // S A H seed
    double variance = 1.0;
    bool bernoulli = false;
    bool deterministic = false;

    void add(CLI::App* app) {
        auto* m = app->add_option("--mdp", mdp_file, "MDP spec file (JSON)");
        auto* t = app->add_option("--tree", tree, "binary-tree instance: S A H gap")->expected(4);
        auto* r = app->add_option("--random", random, "random instance: S A H seed")->expected(4);
        m->excludes(t)->excludes(r);
        t->excludes(r);
        app->add_option("--variance", variance, "tree: Gaussian reward variance");
        app->add_flag("--bernoulli", bernoulli, "tree: Bernoulli rewards instead of Gaussian");
        app->add_flag("--deterministic", deterministic, "random: deterministic transitions");
    }

    InstanceSource source() const {
        InstanceSource src;
        if (!mdp_file.empty()) {
            src.kind = InstanceSource::Kind::File;
            src.path = mdp_file;
        } else if (!tree.empty()) {
            src.kind = InstanceSource::Kind::Tree;
            src.tree.num_states = static_cast<int>(tree[0]);
            src.tree.num_actions = static_cast<int>(tree[1]);
            src.tree.horizon = static_cast<int>(tree[2]);
            src.tree.delta = tree[3];
            src.tree.variance = variance;
            src.tree.bernoulli = bernoulli;
        } else if (!random.empty()) {
            src.kind = InstanceSource::Kind::Random;
            src.num_states = static_cast<int>(random[0]);
            src.num_actions = static_cast<int>(random[1]);
            src.horizon = static_cast<int>(random[2]);
            src.seed = random[3];
            src.stochastic = !deterministic;
        } else {
            throw ConfigError("choose an instance with --mdp FILE, --tree S A H gap or --random S A H seed");
        }
        return src;
    }
};

fs::path output_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return fs::path(g.out_dir) / name;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

void check_eps_delta(double epsilon, double delta) {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

int cmd_gen(const Globals& g, const InstanceOptions& io, const std::string& name) {
    const Mdp mdp = io.source().load();
    const fs::path path = output_path(g, name);
    save_mdp(mdp, path);
    std::cout << "wrote " << path.string() << " (S=" << mdp.num_states() << " A=" << mdp.num_actions()
              << " H=" << mdp.horizon() << ")\n";
    return kExitPass;
}

int cmd_gaps(const Globals& g, const InstanceOptions& io) {
    const Mdp mdp = io.source().load();
    const GapReport rep = gap_report(mdp, {}, g.jobs);
    const fs::path path = output_path(g, "gaps.csv");
    auto out = open_out(path);
    write_gaps_csv(out, rep);
    const OrderingReport ord = check_gap_ordering(rep, mdp.deterministic_transitions());
    std::cout << "wrote " << path.string() << "; global p_min " << format_number(rep.global_p_min()) << "\n";
    for (const GapViolation& v : ord.violations)
        std::cout << "violation: " << v.relation << " at (h=" << v.where.h << ", s=" << v.where.s
                  << ", a=" << v.where.a << ") lhs=" << format_number(v.lhs) << " rhs=" << format_number(v.rhs)
                  << "\n";
    std::cout << (ord.ok() ? "gap ordering holds\n" : "gap ordering violated\n");
    return ord.ok() ? kExitPass : kExitInvariant;
}

int cmd_run(const Globals& g, const InstanceOptions& io, double epsilon, double delta, const std::string& variant,
            const std::string& diagnostics, std::uint64_t max_episodes, bool dump_z) {
    check_eps_delta(epsilon, delta);
    const Mdp mdp = io.source().load();
    RunConfig cfg;
    cfg.rule = parse_bonus_rule(variant);
    // Targeting counts only exist with diagnostics.
    cfg.diagnostics = diagnostics == "on" || dump_z;
    cfg.max_episodes = max_episodes;
    Rng rng(derive_seed({g.seed}));
    const RunResult r = run(mdp, epsilon, delta, cfg, rng);

    const auto& ge = r.good_event;
    const auto& l = r.lemmas;
    const std::uint64_t violations =
        cfg.diagnostics ? ge.reward_failures + ge.transition_failures + ge.count_failures : 0;
    const fs::path path = output_path(g, "run.csv");
    {
        auto out = open_out(path);
        out << "seed,tau,truncated,success,value_of_recommendation,optimal_value,final_gap,violations\n"
            << g.seed << "," << r.tau << "," << r.truncated << "," << r.success << ","
            << format_number(r.value_of_recommendation) << "," << format_number(r.optimal_value) << ","
            << format_number(r.final_gap) << "," << (cfg.diagnostics ? std::to_string(violations) : "") << "\n";
    }
    std::cout << "wrote " << path.string() << "\n"
              << "tau " << r.tau << (r.truncated ? " (truncated)" : "") << "\n"
              << "success " << r.success << "  V(recommended) " << format_number(r.value_of_recommendation)
              << "  V* " << format_number(r.optimal_value) << "\n";
    std::cout << "recommended policy (stage: actions by state)\n";
    for (int h = 1; h <= mdp.horizon(); ++h) {
        std::cout << "  " << h << ":";
        for (int s = 0; s < mdp.num_states(); ++s) std::cout << " " << r.recommended(h, s);
        std::cout << "\n";
    }
    bool ok = !r.truncated;
    if (cfg.diagnostics) {
        std::cout << "good event " << (ge.holds() ? "held" : "violated") << " (reward " << ge.reward_failures
                  << ", transition " << ge.transition_failures << ", count " << ge.count_failures << " episodes)\n"
                  << "sum Z " << r.targeted_total() << ", tau <= sum Z + 1: "
                  << (r.tau <= r.targeted_total() + 1 ? "yes" : "no") << "\n"
                  << "per-episode checks: " << l.episodes << " episodes, stopping-gap " << l.stopping_gap_failures
                  << ", value-gap " << l.value_gap_failures << ", optimism " << l.optimism_failures << " failures\n";
        if (!l.first_failure.empty()) std::cout << "first failure: " << l.first_failure << "\n";
        if (r.tau > r.targeted_total() + 1) ok = false;
        if (ge.holds() && (l.stopping_gap_failures || l.value_gap_failures || l.optimism_failures)) ok = false;
        if (dump_z) {
            const fs::path zpath = output_path(g, "targeted.csv");
            auto out = open_out(zpath);
            out << "h,s,a,Z\n";
            for (int h = 1; h <= mdp.horizon(); ++h)
                for (int s = 0; s < mdp.num_states(); ++s)
                    for (int a : mdp.actions(h, s)) out << h << "," << s << "," << a << "," << r.targeted(h, s, a) << "\n";
            std::cout << "wrote " << zpath.string() << "\n";
        }
    }
    return ok ? kExitPass : kExitInvariant;
}

int cmd_regret(const Globals& g, const InstanceOptions& io, double epsilon, double delta, std::uint64_t episodes,
               std::uint64_t seeds) {
    check_eps_delta(epsilon, delta);
    const Mdp mdp = io.source().load();
    if (episodes == 0) {
        episodes = static_cast<std::uint64_t>(std::ceil(
            2.0 * t_eps_upper_bound(mdp.num_states(), mdp.num_actions(), mdp.horizon(), epsilon, delta)));
    }
    const TEpsilonResult m = measure_t_epsilon(mdp, epsilon, delta, episodes, seeds, g.seed, g.jobs);
    const fs::path path = output_path(g, "regret.csv");
    auto out = open_out(path);
    const auto show = [](const std::optional<std::uint64_t>& x) { return x ? std::to_string(*x) : std::string("none"); };
    out << "t,avg_regret,cum_regret\n";
    for (std::uint64_t T = 1; T <= m.horizon; ++T)
        out << T << "," << format_number(m.mean_average(T)) << "," << format_number(m.mean_cumulative[T - 1]) << "\n";
    out << "# t_eps=" << show(m.sustained) << " first_crossing=" << show(m.first_crossing)
        << " last_above=" << m.last_above << " seeds=" << m.seeds << " threshold=" << format_number(m.threshold)
        << "\n";
    std::cout << "wrote " << path.string() << "\n"
              << "threshold eps*delta " << format_number(m.threshold) << "\n"
              << "T_eps (sustained) " << show(m.sustained) << ", first crossing " << show(m.first_crossing)
              << ", last above " << m.last_above << "\n"
              << "closed-form bound "
              << format_number(t_eps_upper_bound(mdp.num_states(), mdp.num_actions(), mdp.horizon(), epsilon, delta))
              << "\n";
    return kExitPass;
}

int cmd_bounds(const Globals& g, const InstanceOptions& io, double epsilon, double delta) {
    check_eps_delta(epsilon, delta);
    const Mdp mdp = io.source().load();
    const GapReport gaps = gap_report(mdp, {}, g.jobs);
    const BoundReport rep = bound_report(gaps, delta, epsilon);
    const fs::path path = output_path(g, "bounds.csv");
    auto out = open_out(path);
    write_bound_report(out, rep, gaps);
    std::cout << "wrote " << path.string() << "\n"
              << "explicit sample-complexity bound " << format_number(rep.explicit_bound) << "\n"
              << "C(eps) " << format_number(rep.c_epsilon) << "\n";
    return kExitPass;
}

int cmd_sweep(const Globals& g, const InstanceOptions& io, const std::string& config_file, const std::string& algo,
              double epsilon, double delta, const std::string& rule, bool diagnostics, std::uint64_t seeds,
              std::uint64_t episodes, bool out_dir_set) {
    ExperimentConfig cfg;
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw ConfigError("cannot open " + config_file);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = ExperimentConfig::from_json(ss.str());
        if (out_dir_set) cfg.out_dir = g.out_dir;
    } else {
        cfg.instances = {io.source()};
        cfg.algorithm = parse_algorithm(algo);
        cfg.epsilon = epsilon;
        cfg.delta = delta;
        cfg.rule = parse_bonus_rule(rule);
        cfg.diagnostics = diagnostics;
        cfg.episodes = episodes;
        for (std::uint64_t s = 0; s < seeds; ++s) cfg.seeds.push_back(s);
        cfg.master_seed = g.seed;
        cfg.out_dir = g.out_dir;
    }
    cfg.jobs = g.jobs;
    const SweepResult res = sweep(cfg);
    const SweepFiles files = write_sweep(cfg, res);
    std::cout << "wrote " << files.csv.string() << " and " << files.manifest.string() << "\n";
    bool any_failed = false;
    for (const InstanceSummary& s : res.summaries) {
        std::cout << res.labels[s.instance] << ": success rate " << format_number(s.success_rate) << ", mean tau "
                  << format_number(s.mean_tau) << ", median tau " << format_number(s.median_tau);
        if (s.failed_cells) std::cout << ", " << s.failed_cells << " failed cells";
        std::cout << "\n";
        any_failed = any_failed || s.failed_cells > 0;
    }
    for (const CellResult& c : res.cells)
        if (!c.ok) std::cerr << "cell " << res.labels[c.instance] << " seed " << c.seed << ": " << c.error << "\n";
    return any_failed ? kExitInvariant : kExitPass;
}

int cmd_verify(const Globals& g, const std::string& suite) {
    const std::vector<int> ids = suite_criteria(suite);
    AcceptanceSuite s(g.jobs, nullptr);
    bool ok = true;
    for (int id : ids) {
        const CriterionResult r = s.run(id);
        print_criteria(std::cout, {r});
        ok = ok && r.pass;
    }
    return ok ? kExitPass : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optpac: optimistic PAC exploration and instance-dependent bounds"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--out-dir", g.out_dir, "directory for output files");
    app.add_option("--jobs", g.jobs, "worker threads (0: all cores)");
    app.add_option("--seed", g.seed, "master seed");

    double epsilon = 0.2, delta = 0.1;
    std::string rule = "stochastic";
    bool diagnostics = false;
    std::uint64_t max_episodes = 0;

    InstanceOptions gen_io, gaps_io, run_io, regret_io, bounds_io, sweep_io;
    std::string gen_name = "mdp.json";
    auto* gen = app.add_subcommand("gen", "generate an instance and write it as an MDP file");
    gen_io.add(gen);
    gen->add_option("-o,--output", gen_name, "file name inside --out-dir");

    auto* gaps = app.add_subcommand("gaps", "exact gaps and visitation extremes to gaps.csv");
    gaps_io.add(gaps);

    auto* runc = app.add_subcommand("run", "one BPI-UCRL run");
    run_io.add(runc);
    runc->add_option("--epsilon", epsilon, "accuracy");
    runc->add_option("--delta", delta, "confidence");
    std::string run_diag = "off";
    bool dump_z = false;
    runc->add_option("--variant", rule, "bonus: stochastic | deterministic");
    runc->add_option("--diagnostics", run_diag, "good event, targeting and per-episode checks")
        ->check(CLI::IsMember({"on", "off"}));
    runc->add_option("--max-episodes", max_episodes, "episode cap (0: automatic)");
    runc->add_flag("--dump-z", dump_z, "write per-triplet targeting counts to targeted.csv");

    std::uint64_t regret_episodes = 0, regret_seeds = 50;
    auto* regret = app.add_subcommand("regret", "UCBVI regret curve and T_eps");
    regret_io.add(regret);
    regret->add_option("--epsilon", epsilon, "accuracy");
    regret->add_option("--delta", delta, "confidence");
    regret->add_option("--episodes", regret_episodes, "horizon (0: twice the closed-form T_eps bound)");
    regret->add_option("--seeds", regret_seeds, "independent traces");

    auto* bounds = app.add_subcommand("bounds", "closed-form bounds to bounds.csv");
    bounds_io.add(bounds);
    bounds->add_option("--epsilon", epsilon, "accuracy");
    bounds->add_option("--delta", delta, "confidence");

    std::string config_file, algo = "bpi_ucrl";
    std::uint64_t sweep_seeds = 10, sweep_episodes = 0;
    auto* sweepc = app.add_subcommand("sweep", "seed sweep to sweep.csv + manifest.json");
    sweep_io.add(sweepc);
    sweepc->add_option("--config", config_file, "experiment config or manifest (JSON)");
    sweepc->add_option("--algorithm", algo, "bpi_ucrl | ucbvi");
    sweepc->add_option("--epsilon", epsilon, "accuracy");
    sweepc->add_option("--delta", delta, "confidence");
    sweepc->add_option("--variant", rule, "bonus: stochastic | deterministic");
    sweepc->add_flag("--diagnostics", diagnostics, "record good-event status");
    sweepc->add_option("--seeds", sweep_seeds, "seeds 0..n-1");
    sweepc->add_option("--episodes", sweep_episodes, "bpi_ucrl: cap (0: automatic); ucbvi: episodes");

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "run an acceptance suite");
    verify->add_option("suite", suite, "gaps | pac | bounds | targeting | goodevent | lemmas | regret | oracles | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfig;
    }

    try {
        if (*gen) return cmd_gen(g, gen_io, gen_name);
        if (*gaps) return cmd_gaps(g, gaps_io);
        if (*runc) return cmd_run(g, run_io, epsilon, delta, rule, run_diag, max_episodes, dump_z);
        if (*regret) return cmd_regret(g, regret_io, epsilon, delta, regret_episodes, regret_seeds);
        if (*bounds) return cmd_bounds(g, bounds_io, epsilon, delta);
        if (*sweepc)
            return cmd_sweep(g, sweep_io, config_file, algo, epsilon, delta, rule, diagnostics, sweep_seeds,
                             sweep_episodes, app.count("--out-dir") > 0);
        if (*verify) return cmd_verify(g, suite);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BudgetExceeded& e) {
        std::cerr << "enumeration budget exceeded: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return kExitInvariant;
    }
    return kExitConfig;
}
