#pragma once

// End-to-end verification suites with pinned instances and seeds. Runs shared
// between criteria are computed once per suite object.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optpac/bpi_ucrl.hpp"
#include "optpac/mdp.hpp"
#include "optpac/oracles.hpp"

namespace optpac {

inline constexpr std::uint64_t kAcceptanceSeed = 0x5eed0fac7ULL;

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;                 // headline numbers
    std::vector<std::string> failures;  // module: invariant at instance/seed
    double seconds = 0.0;
};

/// Pinned instances.
Mdp acceptance_deterministic_instance();  // random S=3 A=2 H=3, uniform successors
Mdp acceptance_stochastic_instance();     // random S=3 A=2 H=3, Dirichlet rows
Mdp acceptance_tree_instance(bool bernoulli);

/// Brute force over every deterministic policy (no pruning), straight from
/// the definition; independent of the library oracles.
GapTable naive_conditional_return_gaps(const Mdp& mdp);

class AcceptanceSuite {
public:
    /// `log` receives progress lines; may be null.
    explicit AcceptanceSuite(unsigned jobs = 1, std::ostream* log = nullptr);

    CriterionResult pac_correctness();          // 1
    CriterionResult gap_ordering();             // 2
    CriterionResult bound_dominance();          // 3
    CriterionResult targeting();                // 4
    CriterionResult good_event_frequency();     // 5
    CriterionResult lemma_checks();             // 6
    CriterionResult regret_separation();        // 7
    CriterionResult oracle_cross_validation();  // 8

    CriterionResult run(int id);
    std::vector<CriterionResult> run(const std::vector<int>& ids);

    struct PooledRun {
        std::string instance;
        std::uint64_t seed = 0;
        RunResult result;
    };

private:
    struct Instance {
        std::string name;
        Mdp mdp;
        BonusRule rule;
        RunOracles oracles;
    };
    const Instance& instance(int which);
    const std::vector<PooledRun>& pac_runs(int which);
    const std::vector<PooledRun>& stochastic_pool();
    const std::vector<PooledRun>& lemma_runs();
    void note(const std::string& line);

    unsigned jobs_;
    std::ostream* log_;
    std::map<int, Instance> instances_;
    std::map<int, std::vector<PooledRun>> pac_runs_;
    std::optional<std::vector<PooledRun>> pool_;
    std::optional<std::vector<PooledRun>> lemma_runs_;
};

/// Criterion ids for a suite name: gaps, pac, bounds, targeting, goodevent,
/// lemmas, regret, oracles, all. Throws ConfigError.
std::vector<int> suite_criteria(const std::string& suite);

/// "[PASS] 1 name: detail" lines plus indented failures.
void print_criteria(std::ostream& out, const std::vector<CriterionResult>& results);

}  // namespace optpac
