#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "argate/harness/analysis.hpp"
#include "argate/harness/train.hpp"

namespace argate::harness {

/// One seed of one configuration, as written to `run.json`.
struct RunRecord {
    std::string name;
    std::string variant;
    std::string corruption = "clean";
    std::string failure = "none";
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double test_accuracy = 0.0;
    std::vector<EpochStats> curve;
    double wall_seconds = 0.0;
    std::optional<FusionWeightHistogram> histogram;
};

RunRecord make_run_record(const ExperimentConfig& config, const SeedResult& result);
RunRecord failed_run_record(const ExperimentConfig& config, std::uint64_t seed, const std::string& error);

void write_run_record(const std::filesystem::path& path, const RunRecord& record);
RunRecord read_run_record(const std::filesystem::path& path);

/// Every `run.json` below `dir`, sorted by path.
std::vector<RunRecord> collect_run_records(const std::filesystem::path& dir);

/// One table cell: a (variant, corruption, failure) key over its seeds.
struct ReportRow {
    std::string variant;
    std::string corruption;
    std::string failure;
    std::vector<std::uint64_t> seeds;
    std::vector<double> accuracies;  // successful seeds only
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single seed
    std::size_t failed = 0;
};

/// Groups by key in order of first appearance.
std::vector<ReportRow> aggregate(const std::vector<RunRecord>& records);

enum class TableFormat { Csv, Markdown };
TableFormat parse_table_format(const std::string& name);

/// Accuracies with two decimals.
std::string format_table(const std::vector<ReportRow>& rows, TableFormat format);

}  // namespace argate::harness
