#include <charconv>
#include <fstream>
#include <sstream>

#include "argate/data/sources.hpp"

namespace argate::data {

namespace fs = std::filesystem;

const std::vector<std::string>& har_channels() {
    static const std::vector<std::string> names{"body_acc_x",  "body_acc_y",  "body_acc_z",
                                                "body_gyro_x", "body_gyro_y", "body_gyro_z",
                                                "total_acc_x", "total_acc_y", "total_acc_z"};
    return names;
}

const std::vector<std::string>& har_classes() {
    static const std::vector<std::string> names{"WALKING", "WALKING_UPSTAIRS", "WALKING_DOWNSTAIRS",
                                                "SITTING", "STANDING",         "LAYING"};
    return names;
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": missing or unreadable file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Whitespace-separated numeric rows; blank lines are skipped.
std::vector<std::vector<double>> read_rows(const fs::path& path) {
    const std::string text = read_file(path);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        ++line_no;
        std::vector<double> row;
        std::size_t i = pos;
        while (i < end) {
            while (i < end && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            if (i >= end) break;
            std::size_t j = i;
            while (j < end && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            const char* first = text.data() + i + (text[i] == '+' ? 1 : 0);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(first, text.data() + j, v);
            if (ec != std::errc() || ptr != text.data() + j) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric token '" +
                                text.substr(i, j - i) + "'");
            }
            row.push_back(v);
            i = j;
        }
        if (!row.empty()) rows.push_back(std::move(row));
        pos = end + 1;
    }
    return rows;
}

std::vector<std::string> read_class_names(const fs::path& root) {
    const fs::path path = root / "activity_labels.txt";
    if (!fs::exists(path)) return har_classes();
    std::ifstream in(path);
    std::vector<std::string> names;
    std::size_t id = 0;
    std::string name;
    while (in >> id >> name) {
        if (id != names.size() + 1) throw DataError(path.string() + ": activity ids must run 1..n in order");
        names.push_back(name);
    }
    if (names.empty()) throw DataError(path.string() + ": no activity labels");
    return names;
}

Dataset load_split(const fs::path& root, const std::string& split, const std::vector<std::string>& classes) {
    const fs::path dir = root / split;
    const fs::path label_path = dir / ("y_" + split + ".txt");
    const auto label_rows = read_rows(label_path);

    Dataset d;
    d.channels = har_channels();
    d.classes = classes;
    d.labels.reserve(label_rows.size());
    for (std::size_t i = 0; i < label_rows.size(); ++i) {
        const auto& row = label_rows[i];
        const double v = row[0];
        if (row.size() != 1 || v != static_cast<double>(static_cast<std::size_t>(v)) || v < 1.0 ||
            v > static_cast<double>(classes.size())) {
            throw DataError(label_path.string() + ":" + std::to_string(i + 1) + ": label must be an integer in 1.." +
                            std::to_string(classes.size()));
        }
        d.labels.push_back(static_cast<std::size_t>(v) - 1);
    }

    std::vector<std::vector<std::vector<double>>> signals;
    for (const auto& name : d.channels) {
        const fs::path path = dir / "Inertial Signals" / (name + "_" + split + ".txt");
        auto rows = read_rows(path);
        if (rows.size() != d.labels.size()) {
            throw DataError(path.string() + ": " + std::to_string(rows.size()) + " rows but " + label_path.string() +
                            " has " + std::to_string(d.labels.size()) + " labels");
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (d.length == 0) d.length = rows[i].size();
            if (rows[i].size() != d.length) {
                throw DataError(path.string() + ":" + std::to_string(i + 1) + ": row has " +
                                std::to_string(rows[i].size()) + " values, expected " + std::to_string(d.length));
            }
        }
        signals.push_back(std::move(rows));
    }
    d.values.reserve(d.labels.size() * d.example_stride());
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
        for (const auto& channel : signals) d.values.insert(d.values.end(), channel[i].begin(), channel[i].end());
    }
    return d;
}

}  // namespace

SplitDataset load_har(const fs::path& root_in) {
    fs::path root = root_in;
    if (!fs::exists(root / "train") && fs::exists(root / "UCI HAR Dataset" / "train")) root /= "UCI HAR Dataset";
    if (!fs::is_directory(root / "train")) throw DataError(root.string() + ": no train/ directory");
    const auto classes = read_class_names(root);
    SplitDataset out;
    out.train = load_split(root, "train", classes);
    out.test = load_split(root, "test", classes);
    if (out.train.length != out.test.length) {
        throw DataError(root.string() + ": train rows have " + std::to_string(out.train.length) +
                        " values, test rows " + std::to_string(out.test.length));
    }
    out.manifest.name = "har";
    out.manifest.notes.emplace_back("source", root.string());
    normalize_splits(out);
    return out;
}

}  // namespace argate::data
