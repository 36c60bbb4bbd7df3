#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "argate/data/dataset.hpp"

namespace argate::data {

const std::vector<std::string>& har_channels();
const std::vector<std::string>& har_classes();

/// Reads the HAR "Inertial Signals" layout under `root` (the directory
/// holding train/ and test/). Labels 1..6 become 0..5; both splits are
/// min-max normalized with training constants.
SplitDataset load_har(const std::filesystem::path& root);

struct DriverOptions {
    std::size_t window = 1;
    std::size_t stride = 1;
    std::vector<std::string> features{};// empty selects default_driver_features()
    std::string driver_column = "Class";
    double train_fraction = 0.8;        // chronological, per driver
};

/// Fifteen OBD-II columns: the seven named in the fixed-failure experiments
/// plus eight engine/vehicle signals.
const std::vector<std::string>& default_driver_features();

/// Windows each driver's rows (file order is time order), splits each
/// driver's windows chronologically, then normalizes with training constants.
/// Column names match ignoring case, spaces and underscores.
SplitDataset load_driver(const std::filesystem::path& csv, const DriverOptions& options = {});

struct SynthSpec {
    std::size_t channels = 4;
    std::size_t classes = 3;
    std::size_t examples = 0;
    std::size_t length = 32;
    /// Per-channel signal amplitude in [0, 1]; 0 makes the channel pure
    /// noise. Missing entries default to 0.
    std::vector<double> informative{};
    double noise = 0.3;
    std::uint64_t seed = 0;
};

/// Channel k of an example of class c carries
///   amplitude_k * sin(2 pi (c + 1) t / length + phase) + noise * N(0, 1)
/// clamped to [-1, 1]; amplitude 0 gives Uniform[-1, 1] samples instead.
/// Labels cycle through the classes, then the example order is shuffled.
Dataset synth_dataset(const SynthSpec& spec);

}  // namespace argate::data
