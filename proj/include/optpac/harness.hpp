#pragma once

// Batch experiments: seed sweeps over instances, CSV results with a manifest,
// and the named verification suites.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optpac/bpi_ucrl.hpp"
#include "optpac/instances.hpp"
#include "optpac/mdp.hpp"

namespace optpac {

inline constexpr const char* kSweepSchema = "optpac-sweep v1";

struct InstanceSource {
    enum class Kind { File, Tree, Random };
    Kind kind = Kind::Random;
    std::string path;  // file
    TreeSpec tree;     // tree
    int num_states = 3, num_actions = 2, horizon = 3;  // random
    std::uint64_t seed = 0;
    bool stochastic = true;

    /// Short stable label, e.g. "random-S3A2H3-s0-stoch".
    std::string label() const;
    Mdp load() const;
};

enum class Algorithm { BpiUcrl, Ucbvi };
std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

struct ExperimentConfig {
    std::vector<InstanceSource> instances;
    Algorithm algorithm = Algorithm::BpiUcrl;
    double epsilon = 0.2;
    double delta = 0.1;
    std::vector<std::uint64_t> seeds;
    BonusRule rule = BonusRule::Stochastic;
    bool diagnostics = false;
    // bpi_ucrl: episode cap (0 = automatic). ucbvi: episodes per cell.
    std::uint64_t episodes = 0;
    std::string out_dir = ".";
    unsigned jobs = 1;
    std::uint64_t master_seed = 0;

    /// Throws ConfigError.
    void validate() const;
    /// Canonical JSON text (sorted keys, no whitespace). out_dir and jobs are
    /// excluded: they do not affect results.
    std::string canonical() const;
    /// FNV-1a 64 of canonical().
    std::uint64_t hash() const;
    /// Full configuration as pretty JSON, including out_dir and jobs.
    std::string to_json() const;
    /// Accepts either a configuration object or a manifest holding one under
    /// "config". Throws ConfigError.
    static ExperimentConfig from_json(std::string_view text);
};

struct CellResult {
    std::size_t instance = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::uint64_t tau = 0;  // bpi_ucrl: stopping time; ucbvi: episodes played
    bool truncated = false;
    bool success = false;
    double final_gap = 0.0;
    double recommended_value = 0.0;
    double optimal_value = 0.0;
    // Bound columns are empty when the gap oracles exceed the budget.
    std::optional<double> explicit_bound;
    std::optional<bool> explicit_ok;
    std::optional<bool> implicit_ok;
    std::optional<bool> good_event;  // diagnostics only
    double regret = 0.0;             // ucbvi: cumulative regret
};

struct InstanceSummary {
    std::size_t instance = 0;
    std::uint64_t cells = 0;
    std::uint64_t failed_cells = 0;
    double success_rate = 0.0;
    double mean_tau = 0.0;
    double median_tau = 0.0;
    std::optional<double> dominance_rate;   // fraction with both bound checks
    std::optional<double> good_event_violation_rate;
};

struct SweepResult {
    std::vector<std::string> labels;
    std::vector<CellResult> cells;  // sorted by (instance, seed)
    std::vector<InstanceSummary> summaries;
};

/// Runs every (instance, seed) cell. A cell's generator derives from
/// (master_seed, instance index, seed). Cell failures are recorded.
SweepResult sweep(const ExperimentConfig& config);

/// Header comment, column line, data rows, then one summary row per instance.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

struct SweepFiles {
    std::filesystem::path csv;
    std::filesystem::path manifest;
};
/// Writes sweep.csv and manifest.json into config.out_dir.
SweepFiles write_sweep(const ExperimentConfig& config, const SweepResult& result);

/// FNV-1a 64.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t x);

}  // namespace optpac
