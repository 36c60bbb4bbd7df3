#include "argate/corruption/corruption.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace argate::corruption {

namespace {

std::uint64_t split_tag(Phase phase) { return phase == Phase::Train ? 1 : 2; }

std::size_t index_of(const std::vector<std::string>& channels, const std::string& name) {
    const auto it = std::find(channels.begin(), channels.end(), name);
    if (it == channels.end()) throw CorruptionError("unknown channel '" + name + "'");
    return static_cast<std::size_t>(it - channels.begin());
}

void check_range(const std::pair<std::size_t, std::size_t>& range, std::size_t n, const std::string& what) {
    if (range.first > range.second || range.second > n) {
        throw CorruptionError(what + " failing range (" + std::to_string(range.first) + "," +
                              std::to_string(range.second) + ") must be ordered and within [0, " + std::to_string(n) +
                              "]");
    }
}

std::vector<std::size_t> random_subset(std::size_t n, std::size_t count, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

FailureKind parse_failure_kind(const std::string& name) {
    if (name == "uniform") return FailureKind::Uniform;
    if (name == "gaussian") return FailureKind::Gaussian;
    throw CorruptionError("unknown failure model '" + name + "' (expected uniform or gaussian)");
}

std::string to_string(FailureKind kind) { return kind == FailureKind::Uniform ? "uniform" : "gaussian"; }

std::string to_string(Phase phase) { return phase == Phase::Train ? "train" : "test"; }

void fill_noise(std::span<double> values, const FailureModel& model, Rng& rng) {
    if (model.kind == FailureKind::Uniform) {
        for (double& v : values) v = rng.uniform(-1.0, 1.0);
    } else {
        for (double& v : values) v = rng.normal();
    }
}

diffcore::Tensor corrupt_channel(const diffcore::Tensor& channel, const FailureModel& model, Rng& rng) {
    diffcore::Tensor out(channel.shape());
    fill_noise(out.values(), model, rng);
    return out;
}

std::vector<std::string> validate_scheme(const AssignmentScheme& scheme, const std::vector<std::string>& channels) {
    const std::size_t n = channels.size();
    std::vector<std::string> warnings;
    if (const auto* fixed = std::get_if<FixedAssignment>(&scheme)) {
        if (fixed->clean_count > n) {
            throw CorruptionError("n_fclean " + std::to_string(fixed->clean_count) + " exceeds " + std::to_string(n) +
                                  " channels");
        }
        std::vector<std::size_t> seen;
        for (const auto& name : fixed->corrupted) {
            const auto k = index_of(channels, name);
            if (std::find(seen.begin(), seen.end(), k) != seen.end()) {
                throw CorruptionError("channel '" + name + "' listed twice");
            }
            seen.push_back(k);
        }
        if (n - seen.size() != fixed->clean_count) {
            warnings.push_back("fixed assignment lists " + std::to_string(seen.size()) + " corrupted channels, so " +
                               std::to_string(n - seen.size()) + " stay clean, not n_fclean=" +
                               std::to_string(fixed->clean_count) + "; the list wins");
        }
    } else if (const auto* random = std::get_if<RandomAssignment>(&scheme)) {
        if (random->clean_count > n) {
            throw CorruptionError("n_rclean " + std::to_string(random->clean_count) + " exceeds " +
                                  std::to_string(n) + " channels");
        }
    } else {
        const auto& gen = std::get<GenerationTestAssignment>(scheme);
        check_range(gen.train_failing, n, "train");
        check_range(gen.test_failing, n, "test");
    }
    return warnings;
}

std::vector<std::size_t> assign_failing(const AssignmentScheme& scheme, const std::vector<std::string>& channels,
                                        Phase phase, Rng& rng) {
    const std::size_t n = channels.size();
    if (const auto* fixed = std::get_if<FixedAssignment>(&scheme)) {
        std::vector<std::size_t> out;
        for (const auto& name : fixed->corrupted) out.push_back(index_of(channels, name));
        std::sort(out.begin(), out.end());
        return out;
    }
    if (const auto* random = std::get_if<RandomAssignment>(&scheme)) {
        if (random->clean_count > n) throw CorruptionError("n_rclean exceeds channel count");
        return random_subset(n, n - random->clean_count, rng);
    }
    const auto& gen = std::get<GenerationTestAssignment>(scheme);
    const auto& range = phase == Phase::Train ? gen.train_failing : gen.test_failing;
    check_range(range, n, to_string(phase));
    const std::size_t count = range.first + rng.below(range.second - range.first + 1);
    return random_subset(n, count, rng);
}

FixedAssignment fixed_preset(const std::string& name) {
    static const std::map<std::string, FixedAssignment> presets{
        {"har_fclean5", {5, {"total_acc_x", "body_acc_x", "body_gyro_x"}}},
        {"har_fclean6", {6, {"body_acc_z", "body_gyro_x"}}},
        {"driver_fclean5",
         {5,
          {"Long_Term_Fuel_Trim_Bank1", "Maximum_indicated_engine_torque", "Calculated_LOAD_value",
           "Activation_of_Air_compressor", "Engine_coolant_temperature"}}},
        {"driver_fclean7",
         {7,
          {"Long_Term_Fuel_Trim_Bank1", "Maximum_indicated_engine_torque", "Calculated_LOAD_value",
           "Activation_of_Air_compressor", "Engine_coolant_temperature", "Intake_air_pressure",
           "Fuel_consumption"}}},
    };
    const auto it = presets.find(name);
    if (it == presets.end()) throw CorruptionError("unknown fixed preset '" + name + "'");
    return it->second;
}

std::size_t clean_count(std::size_t examples, double clean_fraction) {
    if (!(clean_fraction >= 0.0 && clean_fraction <= 1.0)) {
        throw CorruptionError("clean_fraction must lie in [0, 1]");
    }
    const auto count = std::llround(clean_fraction * static_cast<double>(examples));
    return std::min(examples, static_cast<std::size_t>(std::max<long long>(count, 0)));
}

std::vector<ExampleRecord> CorruptionManifest::split(Phase phase) const {
    std::vector<ExampleRecord> out;
    for (const auto& r : records)
        if (r.split == phase) out.push_back(r);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    return out;
}

data::Dataset build_corrupted_dataset(const data::Dataset& dataset, const CorruptionSpec& spec, Phase phase,
                                      std::vector<ExampleRecord>& records) {
    validate_scheme(spec.scheme, dataset.channels);
    const std::size_t n = dataset.size();
    const std::size_t clean = clean_count(n, spec.clean_fraction);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng selector(derive_seed(spec.seed, 0, split_tag(phase)));
    selector.shuffle(std::span<std::size_t>(order));
    std::vector<bool> is_clean(n, false);
    for (std::size_t i = 0; i < clean; ++i) is_clean[order[i]] = true;

    data::Dataset out = dataset;
    records.clear();
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ExampleRecord record{phase, i, is_clean[i], {}, derive_seed(spec.seed, split_tag(phase), i)};
        if (!record.clean) {
            Rng rng(record.seed);
            record.failing = assign_failing(spec.scheme, dataset.channels, phase, rng);
            for (std::size_t k : record.failing) fill_noise(out.channel(i, k), spec.failure, rng);
        }
        records.push_back(std::move(record));
    }
    return out;
}

CorruptionManifest corrupt_splits(data::SplitDataset& data, const CorruptionSpec& spec) {
    CorruptionManifest manifest{data.train.channels, {}};
    std::vector<ExampleRecord> records;
    data.train = build_corrupted_dataset(data.train, spec, Phase::Train, records);
    manifest.records = records;
    data.test = build_corrupted_dataset(data.test, spec, Phase::Test, records);
    manifest.records.insert(manifest.records.end(), records.begin(), records.end());
    return manifest;
}

void write_corruption_manifest(const std::filesystem::path& path, const CorruptionManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corruption manifest '" + path.string() + "'");
    out << "split,example_index,is_clean,failing_channels,seed\n";
    for (const auto& r : manifest.records) {
        std::string names;
        for (std::size_t k : r.failing) names += (names.empty() ? "" : ";") + manifest.channels.at(k);
        out << to_string(r.split) << ',' << r.index << ',' << (r.clean ? 1 : 0) << ',' << names << ',' << r.seed
            << '\n';
    }
    if (!out) throw std::runtime_error("failed writing corruption manifest '" + path.string() + "'");
}

CorruptionManifest read_corruption_manifest(const std::filesystem::path& path,
                                            const std::vector<std::string>& channels) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corruption manifest '" + path.string() + "'");
    CorruptionManifest manifest{channels, {}};
    std::string line;
    std::getline(in, line);
    if (line != "split,example_index,is_clean,failing_channels,seed") {
        throw CorruptionError(path.string() + ":1: unexpected header '" + line + "'");
    }
    std::size_t line_no = 1;
    const auto fail = [&](const std::string& why) {
        throw CorruptionError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    const auto parse_u64 = [&](const std::string& s) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) fail("bad integer '" + s + "'");
        return v;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != 5) fail("expected 5 fields");
        ExampleRecord r;
        if (fields[0] == "train") {
            r.split = Phase::Train;
        } else if (fields[0] == "test") {
            r.split = Phase::Test;
        } else {
            fail("unknown split '" + fields[0] + "'");
        }
        r.index = parse_u64(fields[1]);
        r.clean = parse_u64(fields[2]) != 0;
        std::stringstream names(fields[3]);
        std::string name;
        while (std::getline(names, name, ';')) {
            const auto it = std::find(channels.begin(), channels.end(), name);
            if (it == channels.end()) fail("unknown channel '" + name + "'");
            r.failing.push_back(static_cast<std::size_t>(it - channels.begin()));
        }
        r.seed = parse_u64(fields[4]);
        manifest.records.push_back(std::move(r));
    }
    return manifest;
}

}  // namespace argate::corruption
