#pragma once

#include <string>
#include <vector>

#include "argate/corruption/corruption.hpp"
#include "argate/fusion/model.hpp"

namespace argate::harness {

class UnsupportedVariant : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct WeightHistogram {
    std::vector<double> masses;   // normalized; all zero when empty
    std::vector<double> weights;  // the raw per-example values
    double mean = 0.0;
    bool empty = true;

    /// Share of examples whose weight exceeds `threshold`.
    double mass_above(double threshold) const;
};

struct FusionWeightHistogram {
    std::string channel;
    std::size_t bins = 50;
    WeightHistogram corrupt;  // the channel is failing
    WeightHistogram clean;    // the channel is intact
};

enum class Conditioning {
    /// Every example, split by the channel's status.
    ChannelStatus,
    /// Corrupted examples only: the channel failing versus the channel
    /// surviving among failing ones (with one clean channel per example this
    /// is the "sole clean channel" subset).
    CorruptedExamples,
};

/// Histograms over [0, 1] of the named channel's fusion weight on the test
/// split, partitioned by its status in the corruption records.
FusionWeightHistogram fusion_weight_histogram(const fusion::FusionModel& model, const data::Dataset& test,
                                              const std::vector<corruption::ExampleRecord>& records,
                                              const std::string& channel, std::size_t bins = 50,
                                              Conditioning conditioning = Conditioning::ChannelStatus);

/// Rows `condition,bin_low,bin_high,mass` followed by `condition,mean,,<v>`
/// and `condition,count,,<n>` lines.
void write_histogram_csv(const std::filesystem::path& path, const FusionWeightHistogram& histogram);

}  // namespace argate::harness
