#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fairrl/lending_env.hpp"
#include "fairrl/metrics_io.hpp"
#include "fairrl/trainer.hpp"

namespace fairrl {

/// A labelled training configuration. Labels become file-name stems.
struct RunVariant {
    std::string label;
    TrainConfig train;
};

struct ExperimentSpec {
    EnvConfig env;
    TrainConfig train;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir;
    std::vector<Algo> algos{Algo::ppo_c};
    bool adjusted = false;  ///< overrides train.adjusted_parity
    int threads = 0;        ///< 0 = hardware concurrency
};

struct ArtifactManifest {
    std::vector<std::filesystem::path> run_csvs;
    std::vector<std::filesystem::path> mean_csvs;
    std::vector<std::filesystem::path> charts;
    /// label -> one row history per seed, in seed-list order
    std::map<std::string, std::vector<std::vector<MetricRow>>> runs;
    std::map<std::string, std::vector<MetricRow>> means;

    std::vector<std::filesystem::path> all() const;
};

/// One variant per entry of spec.algos, labelled by the algo name.
std::vector<RunVariant> algo_variants(const ExperimentSpec& spec);

/// One variant per value of `param` ("beta_kl", "beta_c", "beta_lambda" or
/// "epsilon"), each using spec.algos.front().
std::vector<RunVariant> sweep_variants(const ExperimentSpec& spec, const std::string& param,
                                       const std::vector<double>& values);

/// Trains every (variant, seed) pair, seeds in parallel, each with its own
/// Rng(seed). Writes <label>_seed<k>.csv, <label>_mean.csv and one
/// <metric>.svg per metric. Configuration and output-directory problems are
/// reported before any training starts.
ArtifactManifest run_variants(const ExperimentSpec& spec, const std::vector<RunVariant>& variants);

ArtifactManifest run_experiment(const ExperimentSpec& spec);

}  // namespace fairrl
