#include "argate/harness/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace argate::harness {

namespace {

using nlohmann::json;

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

json histogram_json(const WeightHistogram& h) {
    return {{"empty", h.empty}, {"count", h.weights.size()}, {"mean", h.mean}, {"masses", h.masses}};
}

WeightHistogram histogram_from(const json& j) {
    WeightHistogram h;
    h.empty = j.at("empty").get<bool>();
    h.mean = j.at("mean").get<double>();
    h.masses = j.at("masses").get<std::vector<double>>();
    return h;
}

}  // namespace

RunRecord make_run_record(const ExperimentConfig& config, const SeedResult& result) {
    RunRecord r;
    r.name = config.name;
    r.variant = fusion::to_string(config.model.variant);
    r.corruption = corruption_label(config.corruption);
    r.failure = failure_label(config.corruption);
    r.seed = result.seed;
    r.test_accuracy = result.test_accuracy;
    r.curve = result.curve;
    r.wall_seconds = result.wall_seconds;
    return r;
}

RunRecord failed_run_record(const ExperimentConfig& config, std::uint64_t seed, const std::string& error) {
    RunRecord r = make_run_record(config, SeedResult{seed, 0.0, {}, 0.0, {}});
    r.ok = false;
    r.error = error;
    return r;
}

void write_run_record(const std::filesystem::path& path, const RunRecord& r) {
    json curve = json::array();
    for (const auto& e : r.curve) {
        curve.push_back({{"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"test_loss", e.test_loss},
                         {"test_accuracy", e.test_accuracy}});
    }
    json j{{"name", r.name},
           {"variant", r.variant},
           {"corruption", r.corruption},
           {"failure", r.failure},
           {"seed", r.seed},
           {"status", r.ok ? "ok" : "failed"},
           {"error", r.error},
           {"test_accuracy", r.test_accuracy},
           {"curve", curve},
           {"wall_seconds", r.wall_seconds},
           {"fusion_weights", nullptr}};
    if (r.histogram) {
        j["fusion_weights"] = {{"channel", r.histogram->channel},
                               {"bins", r.histogram->bins},
                               {"corrupt", histogram_json(r.histogram->corrupt)},
                               {"clean", histogram_json(r.histogram->clean)}};
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write run record '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

RunRecord read_run_record(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open run record '" + path.string() + "'");
    try {
        const json j = json::parse(in);
        RunRecord r;
        r.name = j.at("name").get<std::string>();
        r.variant = j.at("variant").get<std::string>();
        r.corruption = j.at("corruption").get<std::string>();
        r.failure = j.at("failure").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.ok = j.at("status").get<std::string>() == "ok";
        r.error = j.at("error").get<std::string>();
        r.test_accuracy = j.at("test_accuracy").get<double>();
        r.wall_seconds = j.at("wall_seconds").get<double>();
        for (const auto& e : j.at("curve")) {
            r.curve.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                               e.at("test_loss").get<double>(), e.at("test_accuracy").get<double>()});
        }
        if (const auto& fw = j.at("fusion_weights"); !fw.is_null()) {
            FusionWeightHistogram h;
            h.channel = fw.at("channel").get<std::string>();
            h.bins = fw.at("bins").get<std::size_t>();
            h.corrupt = histogram_from(fw.at("corrupt"));
            h.clean = histogram_from(fw.at("clean"));
            r.histogram = std::move(h);
        }
        return r;
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": malformed run record: " + e.what());
    }
}

std::vector<RunRecord> collect_run_records(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "run.json") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<RunRecord> out;
    for (const auto& p : paths) out.push_back(read_run_record(p));
    return out;
}

std::vector<ReportRow> aggregate(const std::vector<RunRecord>& records) {
    std::vector<ReportRow> rows;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
    for (const auto& r : records) {
        const auto key = std::make_tuple(r.variant, r.corruption, r.failure);
        auto [it, inserted] = index.emplace(key, rows.size());
        if (inserted) rows.push_back({r.variant, r.corruption, r.failure, {}, {}, 0.0, 0.0, 0});
        auto& row = rows[it->second];
        row.seeds.push_back(r.seed);
        if (r.ok) {
            row.accuracies.push_back(r.test_accuracy);
        } else {
            ++row.failed;
        }
    }
    for (auto& row : rows) {
        const auto n = static_cast<double>(row.accuracies.size());
        if (row.accuracies.empty()) continue;
        double sum = 0.0;
        for (double a : row.accuracies) sum += a;
        row.mean = sum / n;
        if (row.accuracies.size() > 1) {
            double ss = 0.0;
            for (double a : row.accuracies) ss += (a - row.mean) * (a - row.mean);
            row.stddev = std::sqrt(ss / (n - 1.0));
        }
    }
    return rows;
}

TableFormat parse_table_format(const std::string& name) {
    if (name == "csv") return TableFormat::Csv;
    if (name == "md") return TableFormat::Markdown;
    throw std::invalid_argument("unknown table format '" + name + "' (expected csv or md)");
}

std::string format_table(const std::vector<ReportRow>& rows, TableFormat format) {
    std::ostringstream out;
    if (format == TableFormat::Csv) {
        out << "variant,corruption,failure,seeds,mean_accuracy,std_accuracy,failed\n";
        for (const auto& r : rows) {
            const bool has = !r.accuracies.empty();
            out << r.variant << ",\"" << r.corruption << "\"," << r.failure << ',' << r.accuracies.size() << ','
                << (has ? fixed2(r.mean) : "") << ',' << (has ? fixed2(r.stddev) : "") << ',' << r.failed << '\n';
        }
    } else {
        out << "| variant | corruption | failure | seeds | accuracy (%) | failed |\n";
        out << "|---|---|---|---|---|---|\n";
        for (const auto& r : rows) {
            const std::string acc = r.accuracies.empty() ? "n/a" : fixed2(r.mean) + " ± " + fixed2(r.stddev);
            out << "| " << r.variant << " | " << r.corruption << " | " << r.failure << " | " << r.accuracies.size()
                << " | " << acc << " | " << r.failed << " |\n";
        }
    }
    return out.str();
}

}  // namespace argate::harness
