#include "optpac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "optpac/bounds.hpp"
#include "optpac/errors.hpp"
#include "optpac/mdp_io.hpp"
#include "optpac/oracles.hpp"
#include "optpac/parallel.hpp"
#include "optpac/ucbvi.hpp"

namespace optpac {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::string InstanceSource::label() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::File: os << "file:" << std::filesystem::path(path).filename().string(); break;
        case Kind::Tree:
            os << "tree-S" << tree.num_states << "A" << tree.num_actions << "H" << tree.horizon << "-gap"
               << format_number(tree.delta) << (tree.bernoulli ? "-bern" : "-gauss");
            break;
        case Kind::Random:
            os << "random-S" << num_states << "A" << num_actions << "H" << horizon << "-s" << seed
               << (stochastic ? "-stoch" : "-det");
            break;
    }
    return os.str();
}

Mdp InstanceSource::load() const {
    switch (kind) {
        case Kind::File: return load_mdp(path);
        case Kind::Tree: return tree_mdp(tree);
        case Kind::Random: return random_mdp(num_states, num_actions, horizon, seed, stochastic);
    }
    throw ConfigError("unknown instance kind");
}

std::string to_string(Algorithm algorithm) {
    return algorithm == Algorithm::BpiUcrl ? "bpi_ucrl" : "ucbvi";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "bpi_ucrl") return Algorithm::BpiUcrl;
    if (name == "ucbvi") return Algorithm::Ucbvi;
    throw ConfigError("unknown algorithm '" + name + "' (expected bpi_ucrl or ucbvi)");
}

namespace {

json instance_to_json(const InstanceSource& src) {
    switch (src.kind) {
        case InstanceSource::Kind::File: return {{"kind", "file"}, {"path", src.path}};
        case InstanceSource::Kind::Tree:
            return {{"kind", "tree"},          {"S", src.tree.num_states},   {"A", src.tree.num_actions},
                    {"H", src.tree.horizon},   {"gap", src.tree.delta},      {"variance", src.tree.variance},
                    {"bernoulli", src.tree.bernoulli}};
        case InstanceSource::Kind::Random:
            return {{"kind", "random"}, {"S", src.num_states}, {"A", src.num_actions},
                    {"H", src.horizon},  {"seed", src.seed},     {"stochastic", src.stochastic}};
    }
    return nullptr;
}

InstanceSource instance_from_json(const json& j) {
    InstanceSource src;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "file") {
        src.kind = InstanceSource::Kind::File;
        src.path = j.at("path").get<std::string>();
    } else if (kind == "tree") {
        src.kind = InstanceSource::Kind::Tree;
        src.tree.num_states = j.value("S", src.tree.num_states);
        src.tree.num_actions = j.value("A", src.tree.num_actions);
        src.tree.horizon = j.value("H", src.tree.horizon);
        src.tree.delta = j.value("gap", src.tree.delta);
        src.tree.variance = j.value("variance", src.tree.variance);
        src.tree.bernoulli = j.value("bernoulli", src.tree.bernoulli);
    } else if (kind == "random") {
        src.kind = InstanceSource::Kind::Random;
        src.num_states = j.value("S", src.num_states);
        src.num_actions = j.value("A", src.num_actions);
        src.horizon = j.value("H", src.horizon);
        src.seed = j.value("seed", src.seed);
        src.stochastic = j.value("stochastic", src.stochastic);
    } else {
        throw ConfigError("unknown instance kind '" + kind + "'");
    }
    return src;
}

json config_to_json(const ExperimentConfig& c, bool with_local) {
    json inst = json::array();
    for (const auto& src : c.instances) inst.push_back(instance_to_json(src));
    json j = {{"instances", inst},       {"algorithm", to_string(c.algorithm)}, {"epsilon", c.epsilon},
              {"delta", c.delta},        {"seeds", c.seeds},                    {"rule", to_string(c.rule)},
              {"diagnostics", c.diagnostics}, {"episodes", c.episodes},         {"master_seed", c.master_seed}};
    if (with_local) {
        j["out_dir"] = c.out_dir;
        j["jobs"] = c.jobs;
    }
    return j;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch == '\n' ? ' ' : ch;
    }
    return out + "\"";
}

std::string opt_num(const std::optional<double>& x) { return x ? format_number(*x) : ""; }
std::string opt_bool(const std::optional<bool>& x) { return x ? (*x ? "1" : "0") : ""; }

CellResult run_cell(const ExperimentConfig& cfg, const Mdp& mdp, const RunOracles& oracles, std::size_t inst,
                    std::uint64_t seed) {
    CellResult cell;
    cell.instance = inst;
    cell.seed = seed;
    Rng rng(derive_seed({cfg.master_seed, static_cast<std::uint64_t>(inst), seed}));
    const double v_star = oracles.optimal.values.v(1, mdp.initial_state());
    cell.optimal_value = v_star;
    if (cfg.algorithm == Algorithm::BpiUcrl) {
        RunConfig rc;
        rc.rule = cfg.rule;
        rc.diagnostics = cfg.diagnostics;
        rc.max_episodes = cfg.episodes;
        const RunResult r = run(mdp, cfg.epsilon, cfg.delta, rc, rng, &oracles);
        cell.tau = r.tau;
        cell.truncated = r.truncated;
        cell.success = r.success;
        cell.final_gap = r.final_gap;
        cell.recommended_value = r.value_of_recommendation;
        if (oracles.gaps) {
            const double bound = explicit_sample_bound(*oracles.gaps, cfg.delta, cfg.epsilon).total;
            cell.explicit_bound = bound;
            cell.explicit_ok = !r.truncated && static_cast<double>(r.tau) <= bound;
            cell.implicit_ok = !r.truncated && implicit_sample_check(r.tau, *oracles.gaps, cfg.delta, cfg.epsilon);
        }
        if (cfg.diagnostics) cell.good_event = r.good_event.holds();
    } else {
        const RegretTrace trace = run_regret(mdp, cfg.episodes, rng);
        cell.tau = trace.episodes();
        cell.regret = trace.cumulative(trace.episodes());
        const DeterministicPolicy pi = regret_to_pac_sample(trace, rng);
        cell.recommended_value = evaluate_policy(mdp, pi).v(1, mdp.initial_state());
        cell.success = cell.recommended_value >= v_star - cfg.epsilon;
    }
    cell.ok = true;
    return cell;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (instances.empty()) throw ConfigError("at least one instance is required");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    std::set<std::uint64_t> seen;
    for (std::uint64_t s : seeds)
        if (!seen.insert(s).second) throw ConfigError("seed " + std::to_string(s) + " is listed twice");
    if (algorithm == Algorithm::Ucbvi && episodes == 0) throw ConfigError("ucbvi sweeps need episodes > 0");
    for (const auto& src : instances)
        if (src.kind == InstanceSource::Kind::Tree) validate_tree_spec(src.tree);
}

std::string ExperimentConfig::canonical() const { return config_to_json(*this, false).dump(); }
std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }
std::string ExperimentConfig::to_json() const { return config_to_json(*this, true).dump(2); }

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
    try {
        json j = json::parse(text.begin(), text.end());
        if (j.contains("config")) j = j.at("config");
        ExperimentConfig c;
        for (const json& inst : j.at("instances")) c.instances.push_back(instance_from_json(inst));
        c.algorithm = parse_algorithm(j.value("algorithm", std::string("bpi_ucrl")));
        c.epsilon = j.value("epsilon", c.epsilon);
        c.delta = j.value("delta", c.delta);
        c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.rule = parse_bonus_rule(j.value("rule", std::string("stochastic")));
        c.diagnostics = j.value("diagnostics", false);
        c.episodes = j.value("episodes", std::uint64_t{0});
        c.master_seed = j.value("master_seed", std::uint64_t{0});
        c.out_dir = j.value("out_dir", std::string("."));
        c.jobs = j.value("jobs", 1u);
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
}

SweepResult sweep(const ExperimentConfig& config) {
    config.validate();
    const std::size_t ni = config.instances.size();
    SweepResult out;
    std::vector<std::optional<Mdp>> mdps(ni);
    std::vector<RunOracles> oracles(ni);
    std::vector<std::string> load_error(ni);
    for (std::size_t i = 0; i < ni; ++i) {
        out.labels.push_back(config.instances[i].label());
        try {
            mdps[i] = config.instances[i].load();
            oracles[i] = make_run_oracles(*mdps[i], {}, config.algorithm == Algorithm::BpiUcrl);
        } catch (const std::exception& e) {
            mdps[i].reset();
            load_error[i] = e.what();
        }
    }

    std::vector<std::uint64_t> seeds = config.seeds;
    std::sort(seeds.begin(), seeds.end());
    const std::size_t ns = seeds.size();
    out.cells.resize(ni * ns);
    parallel_for(ni * ns, config.jobs, [&](std::size_t k) {
        const std::size_t i = k / ns;
        CellResult& cell = out.cells[k];
        cell.instance = i;
        cell.seed = seeds[k % ns];
        if (!mdps[i]) {
            cell.error = load_error[i];
            return;
        }
        try {
            cell = run_cell(config, *mdps[i], oracles[i], i, cell.seed);
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    });

    for (std::size_t i = 0; i < ni; ++i) {
        InstanceSummary sum;
        sum.instance = i;
        std::vector<double> taus;
        std::uint64_t succ = 0, dom_n = 0, dom_ok = 0, ge_n = 0, ge_bad = 0;
        for (std::size_t k = i * ns; k < (i + 1) * ns; ++k) {
            const CellResult& c = out.cells[k];
            ++sum.cells;
            if (!c.ok) {
                ++sum.failed_cells;
                continue;
            }
            taus.push_back(static_cast<double>(c.tau));
            if (c.success) ++succ;
            if (c.explicit_ok && c.implicit_ok) {
                ++dom_n;
                if (*c.explicit_ok && *c.implicit_ok) ++dom_ok;
            }
            if (c.good_event) {
                ++ge_n;
                if (!*c.good_event) ++ge_bad;
            }
        }
        sum.success_rate = static_cast<double>(succ) / static_cast<double>(sum.cells);
        if (!taus.empty()) {
            double total = 0.0;
            for (double t : taus) total += t;
            sum.mean_tau = total / static_cast<double>(taus.size());
            std::sort(taus.begin(), taus.end());
            const std::size_t m = taus.size();
            sum.median_tau = m % 2 ? taus[m / 2] : 0.5 * (taus[m / 2 - 1] + taus[m / 2]);
        }
        if (dom_n) sum.dominance_rate = static_cast<double>(dom_ok) / static_cast<double>(dom_n);
        if (ge_n) sum.good_event_violation_rate = static_cast<double>(ge_bad) / static_cast<double>(ge_n);
        out.summaries.push_back(sum);
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "# " << kSweepSchema << "\n";
    out << "row,instance,label,seed,status,tau,truncated,success,final_gap,recommended_value,optimal_value,"
           "explicit_bound,explicit_ok,implicit_ok,good_event,regret,success_rate,mean_tau,median_tau,"
           "dominance_rate,good_event_violation_rate,error\n";
    for (const CellResult& c : result.cells) {
        out << "cell," << c.instance << "," << csv_escape(result.labels[c.instance]) << "," << c.seed << ","
            << (c.ok ? "ok" : "error") << ",";
        if (c.ok) {
            out << c.tau << "," << c.truncated << "," << c.success << "," << format_number(c.final_gap) << ","
                << format_number(c.recommended_value) << "," << format_number(c.optimal_value) << ","
                << opt_num(c.explicit_bound) << "," << opt_bool(c.explicit_ok) << "," << opt_bool(c.implicit_ok)
                << "," << opt_bool(c.good_event) << "," << format_number(c.regret);
        } else {
            out << ",,,,,,,,,,";
        }
        out << ",,,,,," << csv_escape(c.error) << "\n";
    }
    for (const InstanceSummary& s : result.summaries) {
        out << "summary," << s.instance << "," << csv_escape(result.labels[s.instance]) << ",,"
            << (s.failed_cells ? "partial" : "ok") << ",,,,,,,,,,,," << format_number(s.success_rate) << ","
            << format_number(s.mean_tau) << "," << format_number(s.median_tau) << ","
            << opt_num(s.dominance_rate) << "," << opt_num(s.good_event_violation_rate) << ",";
        if (s.failed_cells) out << s.failed_cells << " failed cells";
        out << "\n";
    }
}

SweepFiles write_sweep(const ExperimentConfig& config, const SweepResult& result) {
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    SweepFiles files{dir / "sweep.csv", dir / "manifest.json"};

    std::ostringstream csv;
    write_sweep_csv(csv, result);
    {
        std::ofstream f(files.csv, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + files.csv.string());
        f << csv.str();
    }

    json instances = json::array();
    for (std::size_t i = 0; i < config.instances.size(); ++i) {
        json entry = {{"label", result.labels[i]}};
        try {
            entry["mdp_fnv1a64"] = hex64(fnv1a64(serialize_mdp(config.instances[i].load())));
        } catch (const std::exception&) {
            entry["mdp_fnv1a64"] = nullptr;
        }
        instances.push_back(entry);
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const json manifest = {{"tool", "optpac"},
                           {"version", OPTPAC_VERSION},
                           {"schema", kSweepSchema},
                           {"config_hash", hex64(config.hash())},
                           {"config", json::parse(config.to_json())},
                           {"csv", files.csv.filename().string()},
                           {"csv_fnv1a64", hex64(fnv1a64(csv.str()))},
                           {"instances", instances},
                           {"created", stamp}};
    std::ofstream f(files.manifest, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + files.manifest.string());
    f << manifest.dump(2) << "\n";
    return files;
}

}  // namespace optpac
