#include "argate/harness/analysis.hpp"

#include <algorithm>
#include <fstream>

#include "argate/harness/train.hpp"

namespace argate::harness {

namespace {

WeightHistogram build(std::vector<double> weights, std::size_t bins) {
    WeightHistogram h;
    h.masses.assign(bins, 0.0);
    h.weights = std::move(weights);
    h.empty = h.weights.empty();
    if (h.empty) return h;
    double sum = 0.0;
    for (double w : h.weights) {
        const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::clamp(w, 0.0, 1.0) * static_cast<double>(bins)));
        h.masses[bin] += 1.0;
        sum += w;
    }
    const auto n = static_cast<double>(h.weights.size());
    for (double& m : h.masses) m /= n;
    h.mean = sum / n;
    return h;
}

}  // namespace

double WeightHistogram::mass_above(double threshold) const {
    if (weights.empty()) return 0.0;
    const auto count = std::count_if(weights.begin(), weights.end(), [&](double w) { return w > threshold; });
    return static_cast<double>(count) / static_cast<double>(weights.size());
}

FusionWeightHistogram fusion_weight_histogram(const fusion::FusionModel& model, const data::Dataset& test,
                                              const std::vector<corruption::ExampleRecord>& records,
                                              const std::string& channel, std::size_t bins,
                                              Conditioning conditioning) {
    if (!fusion::is_gating(model.config().variant)) {
        throw UnsupportedVariant("fusion weights are undefined for variant '" +
                                 fusion::to_string(model.config().variant) + "'");
    }
    if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
    const std::size_t k = test.channel_index(channel);
    if (records.size() != test.size()) {
        throw std::invalid_argument("corruption records cover " + std::to_string(records.size()) +
                                    " examples, dataset has " + std::to_string(test.size()));
    }
    const auto weights = extract_fusion_weights(model, test);
    std::vector<double> clean, corrupt;
    for (const auto& r : records) {
        if (r.index >= test.size()) throw std::invalid_argument("corruption record index out of range");
        if (conditioning == Conditioning::CorruptedExamples && r.clean) continue;
        const bool failing = std::find(r.failing.begin(), r.failing.end(), k) != r.failing.end();
        (failing ? corrupt : clean).push_back(weights[r.index][k]);
    }
    return {channel, bins, build(std::move(corrupt), bins), build(std::move(clean), bins)};
}

void write_histogram_csv(const std::filesystem::path& path, const FusionWeightHistogram& h) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write histogram '" + path.string() + "'");
    out.precision(17);
    out << "condition,bin_low,bin_high,mass\n";
    for (const auto& [name, hist] : {std::pair{"corrupt", &h.corrupt}, std::pair{"clean", &h.clean}}) {
        for (std::size_t b = 0; b < h.bins; ++b) {
            out << name << ',' << static_cast<double>(b) / static_cast<double>(h.bins) << ','
                << static_cast<double>(b + 1) / static_cast<double>(h.bins) << ',' << hist->masses[b] << '\n';
        }
        out << name << ",mean,," << hist->mean << '\n';
        out << name << ",count,," << hist->weights.size() << '\n';
    }
}

}  // namespace argate::harness
