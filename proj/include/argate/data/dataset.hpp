#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "argate/diffcore/tensor.hpp"

namespace argate::data {

/// Input files that cannot be parsed; the message carries file and line.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// K named channels of equal length per example, stored example-major:
/// values[(n * K + k) * length + t].
struct Dataset {
    std::vector<std::string> channels;
    std::vector<std::string> classes;
    std::size_t length = 0;
    std::vector<double> values;
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t modalities() const { return channels.size(); }
    std::size_t example_stride() const { return channels.size() * length; }

    std::span<double> channel(std::size_t n, std::size_t k);
    std::span<const double> channel(std::size_t n, std::size_t k) const;
    std::span<double> example(std::size_t n);
    std::span<const double> example(std::size_t n) const;

    /// Index of a channel by name; throws std::out_of_range.
    std::size_t channel_index(const std::string& name) const;

    /// Appends one example; `values` holds K * length numbers.
    void push_back(std::span<const double> values, std::size_t label);

    Dataset subset(std::span<const std::size_t> indices) const;

    /// One [B, length] tensor per channel for the given examples.
    std::vector<diffcore::Tensor> batch(std::span<const std::size_t> indices) const;

    /// Throws DataError when shapes or labels are inconsistent.
    void validate() const;
};

/// Per-channel min-max map onto [-1, 1].
struct Normalization {
    std::vector<double> min;
    std::vector<double> max;
    std::string source = "train";

    /// Fits on every value of each channel.
    static Normalization fit(const Dataset& data);

    /// 2 (x - min) / (max - min) - 1, clamped to [-1, 1]. A fitted range of
    /// exactly [-1, 1] is the identity, which makes the map idempotent;
    /// constant channels map to 0.
    void apply(Dataset& data) const;
    double apply(std::size_t channel, double x) const;
};

struct DatasetManifest {
    std::string name;
    std::vector<std::string> channels;
    std::vector<std::string> classes;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::size_t length = 0;
    Normalization normalization;
    /// Free-form provenance, e.g. windowing or source paths.
    std::vector<std::pair<std::string, std::string>> notes;
};

struct SplitDataset {
    Dataset train;
    Dataset test;
    DatasetManifest manifest;
};

/// Fits normalization on train, applies it to both splits and fills the
/// manifest counts.
void normalize_splits(SplitDataset& split);

void save_dataset_cache(const std::filesystem::path& path, const SplitDataset& data);
SplitDataset load_dataset_cache(const std::filesystem::path& path);

/// `field,value` rows; per-channel constants as norm.<channel>.min/max.
void write_manifest_csv(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace argate::data
