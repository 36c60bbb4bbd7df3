#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "argate/corruption/corruption.hpp"
#include "argate/data/sources.hpp"
#include "argate/diffcore/optimizer.hpp"
#include "argate/fusion/config.hpp"

namespace YAML {
class Node;
}

namespace argate::harness {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class DatasetKind { Har, Driver, Synth, Cache };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Synth;
    std::filesystem::path path;  // HAR root, driver CSV or cache file
    data::DriverOptions driver;
    data::SynthSpec synth;          // train split; `examples` is its size
    std::size_t synth_test_examples = 0;
};

/// Fixed-scheme channel lists may name a preset instead of listing channels.
struct ExperimentConfig {
    std::string name = "run";
    DatasetSpec dataset;
    /// Variant and hyperparameters; channels, input length and classes are
    /// filled from the dataset at run time.
    fusion::ModelConfig model;
    /// nullopt trains and tests on clean data.
    std::optional<corruption::CorruptionSpec> corruption;
    /// Explicit corruption seed; otherwise derived from the run seed.
    bool corruption_seed_fixed = false;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    diffcore::OptimizerConfig optimizer;
    /// Channel analysed by fusion-weight histograms; empty skips the analysis.
    std::string analysis_channel;
    std::size_t histogram_bins = 50;
    std::filesystem::path output_dir = "runs";
};

ExperimentConfig parse_experiment_config(const YAML::Node& node);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// YAML text that parses back to an equal config.
std::string to_yaml(const ExperimentConfig& config);
void save_experiment_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// Model section alone, used as the checkpoint sidecar.
std::string model_to_yaml(const fusion::ModelConfig& model);
fusion::ModelConfig parse_model_config(const YAML::Node& node);

/// Short labels for report keys: "clean", "rclean=1", "fclean=5",
/// "(1,2)(3,8)"; and "uniform"/"gaussian"/"none".
std::string corruption_label(const std::optional<corruption::CorruptionSpec>& spec);
std::string failure_label(const std::optional<corruption::CorruptionSpec>& spec);

std::string to_string(DatasetKind kind);

}  // namespace argate::harness
