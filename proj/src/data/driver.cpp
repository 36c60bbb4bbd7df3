#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "argate/data/sources.hpp"

namespace argate::data {

const std::vector<std::string>& default_driver_features() {
    static const std::vector<std::string> names{
        "Long_Term_Fuel_Trim_Bank1",  "Maximum_indicated_engine_torque", "Calculated_LOAD_value",
        "Activation_of_Air_compressor", "Engine_coolant_temperature",    "Intake_air_pressure",
        "Fuel_consumption",           "Accelerator_Pedal_value",         "Throttle_position_signal",
        "Short_Term_Fuel_Trim_Bank1", "Engine_speed",                    "Engine_torque",
        "Vehicle_speed",              "Steering_wheel_angle",            "Acceleration_speed_-_Longitudinal"};
    return names;
}

namespace {

std::string column_key(const std::string& name) {
    std::string key;
    for (char c : name) {
        if (c == ' ' || c == '_') continue;
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return key;
}

/// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    return fields;
}

double parse_number(const std::string& text, const std::string& where) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e && text[b] == '+') ++b;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data() + b, text.data() + e, v);
    if (b == e || ec != std::errc() || ptr != text.data() + e) {
        throw DataError(where + ": non-numeric value '" + text + "'");
    }
    return v;
}

}  // namespace

SplitDataset load_driver(const std::filesystem::path& csv, const DriverOptions& options) {
    if (options.window == 0 || options.stride == 0) throw DataError("driver: window and stride must be positive");
    if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
        throw DataError("driver: train_fraction must lie in (0, 1)");
    }
    const auto& features = options.features.empty() ? default_driver_features() : options.features;

    std::ifstream in(csv);
    if (!in) throw DataError(csv.string() + ": missing or unreadable file");
    std::string line;
    if (!std::getline(in, line)) throw DataError(csv.string() + ": empty file");
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> by_key;
    for (std::size_t i = 0; i < header.size(); ++i) by_key.emplace(column_key(header[i]), i);
    const auto column = [&](const std::string& name) {
        const auto it = by_key.find(column_key(name));
        if (it == by_key.end()) throw DataError(csv.string() + ": unknown column '" + name + "'");
        return it->second;
    };
    std::vector<std::size_t> feature_cols;
    for (const auto& f : features) feature_cols.push_back(column(f));
    const std::size_t driver_col = column(options.driver_column);

    // Rows grouped per driver, in file order.
    std::map<std::string, std::vector<std::vector<double>>> series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            throw DataError(csv.string() + ":" + std::to_string(line_no) + ": " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()));
        }
        std::vector<double> row;
        row.reserve(feature_cols.size());
        for (std::size_t c : feature_cols) {
            row.push_back(parse_number(fields[c], csv.string() + ":" + std::to_string(line_no)));
        }
        series[fields[driver_col]].push_back(std::move(row));
    }
    if (series.empty()) throw DataError(csv.string() + ": no data rows");

    SplitDataset out;
    std::vector<std::string> classes;
    for (const auto& [driver, rows] : series) classes.push_back(driver);
    for (Dataset* d : {&out.train, &out.test}) {
        d->channels = features;
        d->classes = classes;
        d->length = options.window;
    }
    const std::size_t k = features.size(), w = options.window;
    std::vector<double> example(k * w);
    for (std::size_t label = 0; label < classes.size(); ++label) {
        const auto& rows = series[classes[label]];
        if (rows.size() < w) {
            throw DataError(csv.string() + ": driver '" + classes[label] + "' has " + std::to_string(rows.size()) +
                            " rows, shorter than window " + std::to_string(w));
        }
        const std::size_t windows = (rows.size() - w) / options.stride + 1;
        const auto train_windows =
            static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(windows)));
        for (std::size_t i = 0; i < windows; ++i) {
            const std::size_t start = i * options.stride;
            for (std::size_t f = 0; f < k; ++f) {
                for (std::size_t t = 0; t < w; ++t) example[f * w + t] = rows[start + t][f];
            }
            (i < train_windows ? out.train : out.test).push_back(example, label);
        }
    }
    out.manifest.name = "driver";
    out.manifest.notes = {{"source", csv.string()},
                          {"window", std::to_string(options.window)},
                          {"stride", std::to_string(options.stride)},
                          {"train_fraction", std::to_string(options.train_fraction)},
                          {"split", "chronological per driver"}};
    normalize_splits(out);
    return out;
}

}  // namespace argate::data
