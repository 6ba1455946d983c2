#pragma once

// Experiment orchestration: flat `key = value` configuration, Monte-Carlo
// execution, theory attachment and CSV / JSON output.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "adnet/algorithms.hpp"
#include "adnet/metrics.hpp"
#include "adnet/problems.hpp"
#include "adnet/theory.hpp"
#include "adnet/topology.hpp"

namespace adnet {

struct TopologyConfig {
    TopologyKind kind = TopologyKind::grid;
    int K = 1;
    std::string weights = "metropolis";  // metropolis | uniform
    std::optional<double> edge_probability;
    std::uint64_t seed = 0;
};

struct ProblemConfig {
    Family family = Family::least_squares;
    int M = 10;
    std::uint64_t seed = 0;
    std::pair<double, double> lambda_range{1.0, 2.0};
    double noise_var = 0.1;
    bool zero_bias = false;
    double rho = 0.001;
    std::size_t eval_sample_count = 200'000;
    std::size_t noise_cov_samples = 0;  // 0 selects the family default
    bool deterministic = false;
};

struct ExperimentConfig {
    TopologyConfig topology;
    ProblemConfig problem;
    std::vector<AlgorithmConfig> methods;
    double mu = 0.0;  // step-size the theory report is evaluated at
    long iterations = 1;
    int runs = 50;
    std::uint64_t seed = 0;
    double window_fraction = 0.1;
    int threads = 0;  // 0 selects the environment default
    bool emit_theory = true;
    std::string csv_path;
    std::string summary_path;

    std::map<std::string, std::string> entries;  // the parsed key/value pairs
};

/// Parses the flat config format. Lines are `key = value`; `#` starts a
/// comment. Throws ParseError naming the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config(const std::map<std::string, std::string>& entries);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Returns a copy of `cfg` with `key` set to `value`, re-validated.
ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& key,
                               const std::string& value);

/// FNV-1a over the canonical `key=value` listing, as 16 hex digits.
std::string config_digest(const ExperimentConfig& cfg);

/// Default parallel width: ADNET_THREADS if set, else the OpenMP default.
int default_threads();

Graph build_topology(const TopologyConfig& t);
CombinationMatrix build_combination(const TopologyConfig& t, const Graph& g);
ProblemInstance build_problem(const ProblemConfig& p, int K);

struct MethodResult {
    std::string name;
    AlgorithmConfig config;
    MsdTrajectory trajectory;
    std::optional<SteadyState> steady;
    std::optional<long> diverged_at;
    double msd_theory_db = 0.0;
};

struct ExperimentResult {
    std::string digest;
    Graph graph;
    CombinationMatrix combination;
    ProblemInstance problem;
    TheoryReport theory;
    std::vector<MethodResult> methods;
    std::vector<std::uint64_t> sample_digests;  // per run

    bool any_diverged() const;
};

/// Runs every Monte-Carlo run (concurrently when threads > 1) and merges them
/// in run-index order, so output does not depend on scheduling.
ExperimentResult execute(const ExperimentConfig& cfg, std::optional<int> threads = {});

void write_csv(std::ostream& os, const ExperimentResult& r);
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& r);
std::string theory_json(const TheoryReport& t);

/// Writes `output.csv` and `output.summary` when configured.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& r);

/// CLI entry point; returns the process exit code.
int cli(int argc, char** argv);

}  // namespace adnet
