#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "argate/data/dataset.hpp"
#include "argate/diffcore/tensor.hpp"
#include "argate/random.hpp"

namespace argate::corruption {

class CorruptionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FailureKind { Uniform, Gaussian };

/// Replacement noise for a failed channel: Uniform[-1, 1] or Normal(0, 1).
struct FailureModel {
    FailureKind kind = FailureKind::Uniform;
};

FailureKind parse_failure_kind(const std::string& name);
std::string to_string(FailureKind kind);

/// Overwrites every element with a fresh sample.
void fill_noise(std::span<double> values, const FailureModel& model, Rng& rng);

/// Same shape as `channel`, every element a fresh noise sample.
diffcore::Tensor corrupt_channel(const diffcore::Tensor& channel, const FailureModel& model, Rng& rng);

/// Permanent failures: the listed channels fail in every corrupted example.
/// The list is authoritative; `clean_count` is only cross-checked.
struct FixedAssignment {
    std::size_t clean_count = 0;
    std::vector<std::string> corrupted;
};

/// Each corrupted example keeps `clean_count` channels picked uniformly.
struct RandomAssignment {
    std::size_t clean_count = 0;
};

/// Failing-channel count drawn uniformly from an inclusive range that
/// differs between training and test data, e.g. (1,2)(3,8).
struct GenerationTestAssignment {
    std::pair<std::size_t, std::size_t> train_failing{1, 1};
    std::pair<std::size_t, std::size_t> test_failing{1, 1};
};

using AssignmentScheme = std::variant<FixedAssignment, RandomAssignment, GenerationTestAssignment>;

enum class Phase { Train, Test };

std::string to_string(Phase phase);

/// Throws CorruptionError on unknown or repeated channel names, counts above
/// the channel total or empty ranges. Returns non-fatal warnings.
std::vector<std::string> validate_scheme(const AssignmentScheme& scheme, const std::vector<std::string>& channels);

/// Sorted indices of the failing channels for one example.
std::vector<std::size_t> assign_failing(const AssignmentScheme& scheme, const std::vector<std::string>& channels,
                                        Phase phase, Rng& rng);

/// Channel lists for the fixed-failure experiments, keyed
/// har_fclean5, har_fclean6, driver_fclean5, driver_fclean7.
FixedAssignment fixed_preset(const std::string& name);

struct CorruptionSpec {
    FailureModel failure;
    AssignmentScheme scheme = RandomAssignment{};
    double clean_fraction = 1.0 / 3.0;
    std::uint64_t seed = 0;
};

/// round(N * fraction), clamped to [0, N].
std::size_t clean_count(std::size_t examples, double clean_fraction);

struct ExampleRecord {
    Phase split = Phase::Train;
    std::size_t index = 0;
    bool clean = true;
    std::vector<std::size_t> failing;
    std::uint64_t seed = 0;
};

struct CorruptionManifest {
    std::vector<std::string> channels;
    std::vector<ExampleRecord> records;

    /// Records of one split, in example order.
    std::vector<ExampleRecord> split(Phase phase) const;
};

/// Corrupts one split. The clean subset is a seeded shuffle of the example
/// indices; example i draws its failing set and noise from its own stream
/// derive_seed(seed, split + 1, i), so results do not depend on order.
data::Dataset build_corrupted_dataset(const data::Dataset& dataset, const CorruptionSpec& spec, Phase phase,
                                      std::vector<ExampleRecord>& records);

/// Both splits; the manifest lists train records, then test records.
CorruptionManifest corrupt_splits(data::SplitDataset& data, const CorruptionSpec& spec);

/// Columns: split, example_index, is_clean, failing_channels (names joined
/// by ';'), seed.
void write_corruption_manifest(const std::filesystem::path& path, const CorruptionManifest& manifest);
CorruptionManifest read_corruption_manifest(const std::filesystem::path& path,
                                            const std::vector<std::string>& channels);

}  // namespace argate::corruption
