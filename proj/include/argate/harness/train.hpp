#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "argate/corruption/corruption.hpp"
#include "argate/data/dataset.hpp"
#include "argate/fusion/model.hpp"
#include "argate/harness/config.hpp"

namespace argate::harness {

/// Data ready for a run: both splits, plus the corruption records when the
/// config corrupts them.
struct PreparedData {
    data::SplitDataset split;
    std::optional<corruption::CorruptionManifest> corruption;
};

data::SplitDataset load_dataset(const DatasetSpec& spec);

/// Loads the dataset and applies the config's corruption with the seed the
/// config fixes or derive_seed(run_seed, 3).
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t run_seed);

/// Copies dataset shape (channels, length, classes) into the model config.
fusion::ModelConfig resolve_model_config(fusion::ModelConfig model, const data::Dataset& data);

class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(const std::string& message, std::filesystem::path checkpoint)
        : std::runtime_error(message), checkpoint_(std::move(checkpoint)) {}
    /// Parameters as of the last finite step.
    const std::filesystem::path& checkpoint() const { return checkpoint_; }

private:
    std::filesystem::path checkpoint_;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean total loss over batches
    double test_loss = 0.0;   // mean main cross-entropy
    double test_accuracy = 0.0;
};

struct SeedResult {
    std::uint64_t seed = 0;
    double test_accuracy = 0.0;  // percent
    std::vector<EpochStats> curve;
    double wall_seconds = 0.0;
    std::filesystem::path checkpoint;
};

struct TrainOptions {
    /// Where checkpoint, sidecar and corruption manifest go; empty keeps
    /// everything in memory.
    std::filesystem::path run_dir;
    /// Evaluate the test split after every epoch (curves); off computes only
    /// the final accuracy.
    bool track_curves = true;
};

struct TrainedModel {
    SeedResult result;
    std::unique_ptr<fusion::FusionModel> model;
};

/// Trains one seed. Model init, batch order and (unless fixed) corruption all
/// derive from `seed`. The saved checkpoint holds main-model parameters only.
TrainedModel train_model(const ExperimentConfig& config, std::uint64_t seed, const PreparedData& data,
                         const TrainOptions& options = {});

/// Argmax accuracy in percent using the main model only.
double evaluate_accuracy(const fusion::FusionModel& model, const data::Dataset& data, std::size_t batch_size = 256);

/// Mean main cross-entropy over a dataset.
double evaluate_loss(const fusion::FusionModel& model, const data::Dataset& data, std::size_t batch_size = 256);

/// Fusion weights for every example, [N][K]; gating variants only.
std::vector<std::vector<double>> extract_fusion_weights(const fusion::FusionModel& model, const data::Dataset& data,
                                                        std::size_t batch_size = 256);

class ChannelMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Rebuilds the model from the sidecar (`<checkpoint>.yaml`) and loads the
/// inference parameters.
std::unique_ptr<fusion::FusionModel> load_trained_model(const std::filesystem::path& checkpoint);

/// Throws ChannelMismatch unless the dataset carries the model's channels,
/// length and class count.
void check_compatible(const fusion::ModelConfig& model, const data::Dataset& data);

void save_trained_model(const std::filesystem::path& checkpoint, fusion::FusionModel& model);

}  // namespace argate::harness
