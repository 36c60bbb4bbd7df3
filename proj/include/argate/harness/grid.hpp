#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "argate/harness/report.hpp"

namespace argate::harness {

/// Runs one seed of `config` into `<output_dir>/seed-<seed>/`: checkpoint,
/// sidecar, corruption manifest and run.json. Failures are written as a
/// failed record and returned, never thrown.
RunRecord run_experiment_seed(const ExperimentConfig& config, std::uint64_t seed);

/// All seeds of one config, in order.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

/// A base experiment crossed with variants, corruption settings and failure
/// models. A missing axis keeps the base value; an empty one yields no cells.
/// Clean settings ignore the failure axis.
struct GridConfig {
    ExperimentConfig base;
    std::optional<std::vector<fusion::Variant>> variants;
    std::optional<std::vector<std::optional<corruption::CorruptionSpec>>> corruptions;
    std::optional<std::vector<corruption::FailureKind>> failures;
};

/// A document with a `grid:` section, or a plain experiment (one cell).
GridConfig load_grid_config(const std::filesystem::path& path);

/// One ExperimentConfig per cell with output_dir = <out>/<cell name>.
std::vector<ExperimentConfig> expand_grid(const GridConfig& grid, const std::filesystem::path& out);

struct GridOptions {
    /// Binary re-invoked as `<exe> train --config <cell>/config.yaml --seed <s>`
    /// for every run; empty runs in this process.
    std::filesystem::path executable;
    std::size_t jobs = 1;
};

/// Executes every (cell, seed) run, then aggregates the run.json files found
/// under the cells' directories.
std::vector<ReportRow> run_experiment_grid(const std::vector<ExperimentConfig>& cells, const GridOptions& options);

}  // namespace argate::harness
