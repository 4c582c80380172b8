#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "optpac/acceptance.hpp"
#include "optpac/errors.hpp"
#include "optpac/harness.hpp"

using namespace optpac;
namespace fs = std::filesystem;

namespace {

InstanceSource random_source(std::uint64_t seed, bool stochastic) {
    InstanceSource src;
    src.kind = InstanceSource::Kind::Random;
    src.num_states = 2;
    src.num_actions = 2;
    src.horizon = 2;
    src.seed = seed;
    src.stochastic = stochastic;
    return src;
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.instances = {random_source(1, false)};
    cfg.seeds = {3, 1, 2};
    cfg.epsilon = 0.3;
    cfg.rule = BonusRule::Deterministic;
    cfg.master_seed = 17;
    return cfg;
}

std::string csv_of(const SweepResult& r) {
    std::ostringstream out;
    write_sweep_csv(out, r);
    return out.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("optpac_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Sweep, RowsAndSummary) {
    const SweepResult r = sweep(small_config());
    ASSERT_EQ(r.cells.size(), 3u);
    EXPECT_EQ(r.cells[0].seed, 1u);
    EXPECT_EQ(r.cells[2].seed, 3u);
    for (const CellResult& c : r.cells) {
        EXPECT_TRUE(c.ok) << c.error;
        EXPECT_GE(c.tau, 1u);
        EXPECT_TRUE(c.explicit_bound.has_value());
    }
    const auto rows = lines(csv_of(r));
    ASSERT_EQ(rows.size(), 2u + 3u + 1u);
    EXPECT_EQ(rows[0], std::string("# ") + kSweepSchema);
    EXPECT_EQ(rows[1].rfind("row,instance,label,seed,status,tau", 0), 0u);
    EXPECT_NE(rows[5].find("summary"), std::string::npos);
}

TEST(Sweep, ReproducibleAcrossRunsAndJobs) {
    ExperimentConfig cfg = small_config();
    cfg.instances.push_back(random_source(4, true));
    cfg.rule = BonusRule::Stochastic;
    cfg.diagnostics = true;
    const std::string a = csv_of(sweep(cfg));
    const std::string b = csv_of(sweep(cfg));
    cfg.jobs = 3;
    const std::string c = csv_of(sweep(cfg));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    cfg.master_seed = 18;
    EXPECT_NE(a, csv_of(sweep(cfg)));
}

TEST(Sweep, FailedCellIsRecorded) {
    ExperimentConfig cfg = small_config();
    InstanceSource missing;
    missing.kind = InstanceSource::Kind::File;
    missing.path = "/nonexistent/model.json";
    InstanceSource gaussian;
    gaussian.kind = InstanceSource::Kind::Tree;
    cfg.instances = {missing, random_source(1, false), gaussian};
    const SweepResult r = sweep(cfg);
    ASSERT_EQ(r.cells.size(), 9u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_FALSE(r.cells[k].ok);
        EXPECT_NE(r.cells[k].error.find("cannot open"), std::string::npos) << r.cells[k].error;
        EXPECT_TRUE(r.cells[3 + k].ok);
        EXPECT_FALSE(r.cells[6 + k].ok);
    }
    EXPECT_EQ(r.summaries[0].failed_cells, 3u);
    EXPECT_EQ(r.summaries[1].failed_cells, 0u);
    EXPECT_NE(csv_of(r).find("cannot open MDP file"), std::string::npos);
}

TEST(Sweep, DeterministicInstanceMostlySucceeds) {
    ExperimentConfig cfg = small_config();
    cfg.epsilon = 0.1;
    cfg.seeds.clear();
    for (std::uint64_t s = 0; s < 100; ++s) cfg.seeds.push_back(s);
    const SweepResult r = sweep(cfg);
    EXPECT_GE(r.summaries[0].success_rate, 0.9);
    ASSERT_TRUE(r.summaries[0].dominance_rate.has_value());
    EXPECT_EQ(*r.summaries[0].dominance_rate, 1.0);
}

TEST(Sweep, UcbviCells) {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::Ucbvi;
    cfg.episodes = 300;
    const SweepResult r = sweep(cfg);
    for (const CellResult& c : r.cells) {
        EXPECT_TRUE(c.ok) << c.error;
        EXPECT_EQ(c.tau, 300u);
        EXPECT_GE(c.regret, 0.0);
    }
}

TEST(Config, Validation) {
    const auto bad = [](auto mutate) {
        ExperimentConfig cfg = small_config();
        mutate(cfg);
        EXPECT_THROW(cfg.validate(), ConfigError);
    };
    bad([](ExperimentConfig& c) { c.instances.clear(); });
    bad([](ExperimentConfig& c) { c.seeds.clear(); });
    bad([](ExperimentConfig& c) { c.seeds = {1, 1}; });
    bad([](ExperimentConfig& c) { c.epsilon = 0.0; });
    bad([](ExperimentConfig& c) { c.delta = 1.0; });
    bad([](ExperimentConfig& c) { c.algorithm = Algorithm::Ucbvi; });
    bad([](ExperimentConfig& c) {
        InstanceSource t;
        t.kind = InstanceSource::Kind::Tree;
        t.tree.num_states = 2;
        c.instances = {t};
    });
    EXPECT_NO_THROW(small_config().validate());
    EXPECT_THROW(sweep(ExperimentConfig{}), ConfigError);
    EXPECT_THROW(parse_algorithm("dqn"), ConfigError);
    EXPECT_EQ(parse_algorithm(to_string(Algorithm::Ucbvi)), Algorithm::Ucbvi);
}

TEST(Config, HashIgnoresOutputLocation) {
    ExperimentConfig a = small_config(), b = small_config();
    b.out_dir = "/tmp/elsewhere";
    b.jobs = 4;
    EXPECT_EQ(a.hash(), b.hash());
    b.epsilon = 0.25;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.hash(), fnv1a64(a.canonical()));
}

TEST(Config, JsonRoundTrip) {
    ExperimentConfig cfg = small_config();
    InstanceSource t;
    t.kind = InstanceSource::Kind::Tree;
    t.tree.delta = 0.3;
    t.tree.bernoulli = true;
    cfg.instances.push_back(t);
    const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.canonical(), cfg.canonical());
    EXPECT_THROW(ExperimentConfig::from_json("{"), ConfigError);
    EXPECT_THROW(ExperimentConfig::from_json(R"({"instances":[{"kind":"torus"}],"seeds":[1]})"), ConfigError);
}

TEST(Manifest, ReproducesCsv) {
    ExperimentConfig cfg = small_config();
    cfg.out_dir = scratch("manifest").string();
    const SweepFiles files = write_sweep(cfg, sweep(cfg));
    const std::string csv = slurp(files.csv);
    EXPECT_EQ(csv.find("created"), std::string::npos);

    ExperimentConfig again = ExperimentConfig::from_json(slurp(files.manifest));
    EXPECT_EQ(again.hash(), cfg.hash());
    again.out_dir = scratch("manifest_rerun").string();
    const SweepFiles rerun = write_sweep(again, sweep(again));
    EXPECT_EQ(slurp(rerun.csv), csv);
    EXPECT_NE(slurp(files.manifest).find(hex64(fnv1a64(csv))), std::string::npos);
}

TEST(Hash, Fnv1a) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Suites, NamesMapToCriteria) {
    EXPECT_EQ(suite_criteria("gaps"), std::vector<int>{2});
    EXPECT_EQ(suite_criteria("targeting"), std::vector<int>{4});
    EXPECT_EQ(suite_criteria("regret"), std::vector<int>{7});
    EXPECT_EQ(suite_criteria("all").size(), 8u);
    EXPECT_THROW(suite_criteria("everything"), ConfigError);
}

TEST(Suites, GapSuitePasses) {
    AcceptanceSuite suite(1);
    const CriterionResult r = suite.run(2);
    EXPECT_TRUE(r.pass) << r.detail;
    std::ostringstream out;
    print_criteria(out, {r});
    EXPECT_EQ(out.str().rfind("[PASS] 2 ", 0), 0u);
}
