#include "argate/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "argate/diffcore/binary_io.hpp"

namespace argate::data {

namespace {

constexpr const char* kCacheTag = "argate.dataset";

}  // namespace

std::span<double> Dataset::channel(std::size_t n, std::size_t k) {
    return {values.data() + (n * channels.size() + k) * length, length};
}

std::span<const double> Dataset::channel(std::size_t n, std::size_t k) const {
    return {values.data() + (n * channels.size() + k) * length, length};
}

std::span<double> Dataset::example(std::size_t n) { return {values.data() + n * example_stride(), example_stride()}; }

std::span<const double> Dataset::example(std::size_t n) const {
    return {values.data() + n * example_stride(), example_stride()};
}

std::size_t Dataset::channel_index(const std::string& name) const {
    const auto it = std::find(channels.begin(), channels.end(), name);
    if (it == channels.end()) throw std::out_of_range("unknown channel '" + name + "'");
    return static_cast<std::size_t>(it - channels.begin());
}

void Dataset::push_back(std::span<const double> example_values, std::size_t label) {
    if (example_values.size() != example_stride()) {
        throw DataError("example has " + std::to_string(example_values.size()) + " values, expected " +
                        std::to_string(example_stride()));
    }
    values.insert(values.end(), example_values.begin(), example_values.end());
    labels.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out{channels, classes, length, {}, {}};
    out.values.reserve(indices.size() * example_stride());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(example(i), labels.at(i));
    return out;
}

std::vector<diffcore::Tensor> Dataset::batch(std::span<const std::size_t> indices) const {
    std::vector<diffcore::Tensor> out;
    out.reserve(channels.size());
    for (std::size_t k = 0; k < channels.size(); ++k) {
        diffcore::Tensor t({indices.size(), length});
        double* dst = t.data();
        for (std::size_t i : indices) {
            const auto src = channel(i, k);
            dst = std::copy(src.begin(), src.end(), dst);
        }
        out.push_back(std::move(t));
    }
    return out;
}

void Dataset::validate() const {
    if (values.size() != labels.size() * example_stride()) {
        throw DataError("dataset holds " + std::to_string(values.size()) + " values for " +
                        std::to_string(labels.size()) + " examples of " + std::to_string(example_stride()));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes.size()) {
            throw DataError("example " + std::to_string(i) + " has label " + std::to_string(labels[i]) + " but only " +
                            std::to_string(classes.size()) + " classes");
        }
    }
}

Normalization Normalization::fit(const Dataset& data) {
    Normalization n;
    const std::size_t k = data.modalities();
    n.min.assign(k, 0.0);
    n.max.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < data.size(); ++i) {
            for (double v : data.channel(i, c)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (data.size() == 0) lo = hi = 0.0;
        n.min[c] = lo;
        n.max[c] = hi;
    }
    return n;
}

double Normalization::apply(std::size_t channel, double x) const {
    const double lo = min[channel], hi = max[channel];
    if (lo == -1.0 && hi == 1.0) return std::clamp(x, -1.0, 1.0);
    if (hi == lo) return 0.0;
    return std::clamp(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0);
}

void Normalization::apply(Dataset& data) const {
    if (min.size() != data.modalities() || max.size() != data.modalities()) {
        throw DataError("normalization has " + std::to_string(min.size()) + " channels, dataset has " +
                        std::to_string(data.modalities()));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t c = 0; c < data.modalities(); ++c) {
            for (double& v : data.channel(i, c)) v = apply(c, v);
        }
    }
}

void normalize_splits(SplitDataset& split) {
    split.manifest.normalization = Normalization::fit(split.train);
    split.manifest.normalization.source = "train";
    split.manifest.normalization.apply(split.train);
    split.manifest.normalization.apply(split.test);
    split.manifest.channels = split.train.channels;
    split.manifest.classes = split.train.classes;
    split.manifest.length = split.train.length;
    split.manifest.train_count = split.train.size();
    split.manifest.test_count = split.test.size();
}

namespace {

void write_strings(diffcore::BinaryWriter& w, const std::vector<std::string>& items) {
    w.u64(items.size());
    for (const auto& s : items) w.string(s);
}

std::vector<std::string> read_strings(diffcore::BinaryReader& r) {
    const auto n = r.u64();
    if (n > (1u << 20)) throw diffcore::FormatError("dataset cache: implausible list length " + std::to_string(n));
    std::vector<std::string> out(n);
    for (auto& s : out) s = r.string();
    return out;
}

void write_split(diffcore::BinaryWriter& w, const Dataset& d) {
    w.u64(d.size());
    for (std::size_t label : d.labels) w.u64(label);
    w.f64s(d.values);
}

Dataset read_split(diffcore::BinaryReader& r, const DatasetManifest& m) {
    Dataset d{m.channels, m.classes, m.length, {}, {}};
    const auto n = r.u64();
    if (n > (std::uint64_t{1} << 32)) throw diffcore::FormatError("dataset cache: implausible example count");
    d.labels.resize(n);
    for (auto& l : d.labels) l = r.u64();
    d.values.resize(n * d.example_stride());
    r.f64s(d.values);
    d.validate();
    return d;
}

}  // namespace

void save_dataset_cache(const std::filesystem::path& path, const SplitDataset& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write dataset cache '" + path.string() + "'");
    diffcore::BinaryWriter w(out);
    const auto& m = data.manifest;
    w.header();
    w.string(kCacheTag);
    w.string(m.name);
    write_strings(w, m.channels);
    write_strings(w, m.classes);
    w.u64(m.length);
    w.string(m.normalization.source);
    w.f64s(m.normalization.min);
    w.f64s(m.normalization.max);
    w.u64(m.notes.size());
    for (const auto& [key, value] : m.notes) {
        w.string(key);
        w.string(value);
    }
    write_split(w, data.train);
    write_split(w, data.test);
    if (!out) throw std::runtime_error("failed writing dataset cache '" + path.string() + "'");
}

SplitDataset load_dataset_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset cache '" + path.string() + "'");
    diffcore::BinaryReader r(in);
    r.header();
    if (r.string() != kCacheTag) throw diffcore::FormatError("'" + path.string() + "' is not a dataset cache");
    SplitDataset out;
    auto& m = out.manifest;
    m.name = r.string();
    m.channels = read_strings(r);
    m.classes = read_strings(r);
    m.length = r.u64();
    m.normalization.source = r.string();
    m.normalization.min.resize(m.channels.size());
    m.normalization.max.resize(m.channels.size());
    r.f64s(m.normalization.min);
    r.f64s(m.normalization.max);
    const auto notes = r.u64();
    if (notes > 4096) throw diffcore::FormatError("dataset cache: implausible note count");
    for (std::uint64_t i = 0; i < notes; ++i) {
        auto key = r.string();
        m.notes.emplace_back(std::move(key), r.string());
    }
    out.train = read_split(r, m);
    out.test = read_split(r, m);
    if (!r.at_end()) throw diffcore::FormatError("dataset cache '" + path.string() + "' has trailing bytes");
    m.train_count = out.train.size();
    m.test_count = out.test.size();
    return out;
}

void write_manifest_csv(const std::filesystem::path& path, const DatasetManifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
    const auto join = [](const std::vector<std::string>& items) {
        std::string s;
        for (const auto& item : items) s += (s.empty() ? "" : ";") + item;
        return s;
    };
    // Quotes fields holding a comma, quote or newline.
    const auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    out.precision(17);
    out << "field,value\n";
    out << "name," << field(m.name) << "\n";
    out << "channels," << field(join(m.channels)) << "\n";
    out << "classes," << field(join(m.classes)) << "\n";
    out << "length," << m.length << "\n";
    out << "train_count," << m.train_count << "\n";
    out << "test_count," << m.test_count << "\n";
    out << "normalization_source," << m.normalization.source << "\n";
    for (std::size_t c = 0; c < m.channels.size() && c < m.normalization.min.size(); ++c) {
        out << "norm." << m.channels[c] << ".min," << m.normalization.min[c] << "\n";
        out << "norm." << m.channels[c] << ".max," << m.normalization.max[c] << "\n";
    }
    for (const auto& [key, value] : m.notes) out << field(key) << "," << field(value) << "\n";
}

}  // namespace argate::data
