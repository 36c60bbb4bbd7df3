// argate: data preparation, corruption, training, evaluation and reporting.
//
// Failures print one line to stderr,
//   error code=<code> message="<text>"
// and exit with a nonzero status.

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <iostream>
#include <unistd.h>

#include "argate/corruption/corruption.hpp"
#include "argate/data/sources.hpp"
#include "argate/harness/analysis.hpp"
#include "argate/harness/grid.hpp"
#include "argate/harness/report.hpp"
#include "argate/harness/train.hpp"

namespace {

using namespace argate;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kData = 4, kRuntime = 5, kAborted = 6, kRunFailed = 7 };

struct CliError : std::runtime_error {
    CliError(ExitCode code, const std::string& message) : std::runtime_error(message), code(code) {}
    ExitCode code;
};

const char* code_name(ExitCode code) {
    switch (code) {
        case kUsage: return "usage";
        case kConfig: return "config";
        case kData: return "data";
        case kAborted: return "training_aborted";
        case kRunFailed: return "run_failed";
        default: return "runtime";
    }
}

int report_error(ExitCode code, const std::string& message) {
    std::string escaped;
    for (char c : message) {
        if (c == '"' || c == '\\') escaped += '\\';
        escaped += c == '\n' ? ' ' : c;
    }
    std::cerr << "error code=" << code_name(code) << " message=\"" << escaped << "\"\n";
    return code;
}

fs::path self_executable() {
    std::error_code ec;
    auto path = fs::read_symlink("/proc/self/exe", ec);
    if (ec) throw CliError(kRuntime, "cannot resolve /proc/self/exe");
    return path;
}

// --- prepare-data --------------------------------------------------------

struct PrepareArgs {
    std::string dataset;
    std::string root;
    std::string out;
    std::string manifest;
    std::size_t window = 1;
    std::size_t stride = 1;
    std::vector<std::string> features;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

int prepare_data(const PrepareArgs& args) {
    data::SplitDataset split;
    if (args.dataset == "har") {
        split = data::load_har(args.root);
    } else if (args.dataset == "driver") {
        split = data::load_driver(args.root, {.window = args.window,
                                              .stride = args.stride,
                                              .features = args.features,
                                              .train_fraction = args.train_fraction});
    } else if (args.dataset == "synth") {
        harness::DatasetSpec spec;
        spec.synth = {.examples = 600, .informative = {1.0, 0.6}, .seed = args.seed};
        spec.synth_test_examples = 300;
        split = harness::load_dataset(spec);
    } else {
        throw CliError(kUsage, "unknown dataset '" + args.dataset + "' (expected har, driver or synth)");
    }
    data::save_dataset_cache(args.out, split);
    if (!args.manifest.empty()) data::write_manifest_csv(args.manifest, split.manifest);
    std::cout << "wrote " << args.out << ": " << split.train.size() << " train, " << split.test.size()
              << " test, " << split.train.modalities() << " channels x " << split.train.length << "\n";
    return kOk;
}

// --- corrupt -------------------------------------------------------------

int corrupt(const std::string& spec_path, const std::string& in, const std::string& out, const std::string& manifest,
            std::optional<std::uint64_t> seed) {
    YAML::Node node;
    try {
        node = YAML::LoadFile(spec_path);
    } catch (const YAML::Exception& e) {
        throw CliError(kConfig, spec_path + ": " + e.what());
    }
    // Either a full experiment config or a bare corruption mapping.
    YAML::Node wrapper;
    if (node["corruption"]) {
        wrapper["corruption"] = node["corruption"];
    } else {
        wrapper["corruption"] = node;
    }
    const auto config = harness::parse_experiment_config(wrapper);
    if (!config.corruption) throw CliError(kConfig, spec_path + ": corruption spec is 'clean'");
    auto spec = *config.corruption;
    if (seed) {
        spec.seed = *seed;
    } else if (!config.corruption_seed_fixed) {
        throw CliError(kConfig, spec_path + ": no corruption seed; pass --seed or set corruption.seed");
    }
    auto split = data::load_dataset_cache(in);
    for (const auto& w : corruption::validate_scheme(spec.scheme, split.train.channels)) {
        std::cerr << "warning: " << w << "\n";
    }
    const auto records = corruption::corrupt_splits(split, spec);
    split.manifest.notes.emplace_back("corruption", harness::corruption_label(spec) + " " +
                                                        harness::failure_label(spec) + " seed " +
                                                        std::to_string(spec.seed));
    data::save_dataset_cache(out, split);
    corruption::write_corruption_manifest(manifest, records);
    std::cout << "wrote " << out << " and " << manifest << "\n";
    return kOk;
}

// --- train / eval / fwdist ---------------------------------------------

int train(const std::string& config_path, std::optional<std::uint64_t> seed) {
    auto config = harness::load_experiment_config(config_path);
    if (config.dataset.kind == harness::DatasetKind::Cache || config.dataset.kind == harness::DatasetKind::Har ||
        config.dataset.kind == harness::DatasetKind::Driver) {
        if (!fs::exists(config.dataset.path)) {
            throw CliError(kData, "dataset path '" + config.dataset.path.string() + "' does not exist");
        }
    }
    // Fixed channel lists may disagree with their clean count; say so before
    // training. Hard errors are left to the run, which records them.
    if (config.corruption && std::holds_alternative<corruption::FixedAssignment>(config.corruption->scheme)) {
        try {
            for (const auto& w : corruption::validate_scheme(config.corruption->scheme,
                                                             harness::load_dataset(config.dataset).train.channels)) {
                std::cerr << "warning: " << w << "\n";
            }
        } catch (const std::exception&) {
        }
    }
    const auto seeds = seed ? std::vector<std::uint64_t>{*seed} : config.seeds;
    bool failed = false;
    for (auto s : seeds) {
        const auto record = harness::run_experiment_seed(config, s);
        if (record.ok) {
            std::cout << config.name << " seed " << s << ": test accuracy " << record.test_accuracy << "%\n";
        } else {
            failed = true;
            std::cerr << config.name << " seed " << s << " failed: " << record.error << "\n";
        }
    }
    if (failed) throw CliError(kRunFailed, "one or more runs failed; see run.json under " + config.output_dir.string());
    return kOk;
}

int eval(const std::string& checkpoint, const std::string& data_path, const std::string& split_name) {
    const auto model = harness::load_trained_model(checkpoint);
    const auto split = data::load_dataset_cache(data_path);
    const auto& dataset = split_name == "train" ? split.train : split.test;
    std::printf("%.2f\n", harness::evaluate_accuracy(*model, dataset));
    return kOk;
}

int fwdist(const std::string& checkpoint, const std::string& data_path, const std::string& manifest_path,
           const std::string& channel, const std::string& out, std::size_t bins, bool corrupted_only) {
    const auto model = harness::load_trained_model(checkpoint);
    const auto split = data::load_dataset_cache(data_path);
    const auto manifest = corruption::read_corruption_manifest(manifest_path, split.test.channels);
    const auto hist = harness::fusion_weight_histogram(
        *model, split.test, manifest.split(corruption::Phase::Test), channel, bins,
        corrupted_only ? harness::Conditioning::CorruptedExamples : harness::Conditioning::ChannelStatus);
    harness::write_histogram_csv(out, hist);
    const auto describe = [](const char* name, const harness::WeightHistogram& h) {
        std::cout << name << ": ";
        if (h.empty) {
            std::cout << "empty\n";
        } else {
            std::cout << h.weights.size() << " examples, mean " << h.mean << "\n";
        }
    };
    describe("corrupt", hist.corrupt);
    describe("clean", hist.clean);
    return kOk;
}

// --- grid / report -------------------------------------------------------

int grid(const std::string& config_path, const std::string& out, std::size_t jobs, bool in_process, bool list) {
    const auto grid = harness::load_grid_config(config_path);
    const auto cells = harness::expand_grid(grid, out);
    if (list) {
        for (const auto& cell : cells) std::cout << cell.output_dir.string() << " (" << cell.seeds.size() << " seeds)\n";
        return kOk;
    }
    fs::create_directories(out);
    harness::GridOptions options;
    options.jobs = jobs;
    if (!in_process) options.executable = self_executable();
    const auto rows = harness::run_experiment_grid(cells, options);
    std::cout << harness::format_table(rows, harness::TableFormat::Markdown);
    return kOk;
}

int report(const std::string& in, const std::string& format) {
    const auto fmt = harness::parse_table_format(format);
    std::cout << harness::format_table(harness::aggregate(harness::collect_run_records(in)), fmt);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust gated multimodal fusion: data, training and evaluation"};
    app.require_subcommand(1);

    PrepareArgs prep;
    auto* prepare_cmd = app.add_subcommand("prepare-data", "Parse a raw dataset into a normalized cache");
    prepare_cmd->add_option("dataset", prep.dataset, "har, driver or synth")->required();
    prepare_cmd->add_option("--root", prep.root, "HAR directory or driver CSV");
    prepare_cmd->add_option("--out", prep.out, "Output cache file")->required();
    prepare_cmd->add_option("--manifest", prep.manifest, "Also write the dataset manifest CSV");
    prepare_cmd->add_option("--window", prep.window, "Driver window length")->capture_default_str();
    prepare_cmd->add_option("--stride", prep.stride, "Driver window stride")->capture_default_str();
    prepare_cmd->add_option("--features", prep.features, "Driver feature columns");
    prepare_cmd->add_option("--train-fraction", prep.train_fraction, "Driver chronological train share")
        ->capture_default_str();
    prepare_cmd->add_option("--seed", prep.seed, "Seed for the synthetic dataset");

    std::string spec_path, in_path, out_path, manifest_path;
    std::optional<std::uint64_t> corrupt_seed;
    auto* corrupt_cmd = app.add_subcommand("corrupt", "Apply sensor failures to a cached dataset");
    corrupt_cmd->add_option("--spec", spec_path, "YAML corruption spec or experiment config")->required();
    corrupt_cmd->add_option("--in", in_path, "Input cache")->required();
    corrupt_cmd->add_option("--out", out_path, "Output cache")->required();
    corrupt_cmd->add_option("--manifest", manifest_path, "Per-example corruption CSV")->required();
    corrupt_cmd->add_option("--seed", corrupt_seed, "Master seed (overrides corruption.seed)");

    std::string train_config;
    std::optional<std::uint64_t> train_seed;
    auto* train_cmd = app.add_subcommand("train", "Train one config for one or all of its seeds");
    train_cmd->add_option("--config", train_config, "Experiment YAML")->required();
    train_cmd->add_option("--seed", train_seed, "Run only this seed");

    std::string checkpoint, data_path, split_name = "test";
    auto* eval_cmd = app.add_subcommand("eval", "Test accuracy (%) of a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--data", data_path, "Dataset cache")->required();
    eval_cmd->add_option("--split", split_name, "train or test")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();

    std::string channel, fw_out;
    std::size_t bins = 50;
    bool corrupted_only = false;
    auto* fw_cmd = app.add_subcommand("fwdist", "Fusion-weight histograms of one channel, clean vs corrupt");
    fw_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    fw_cmd->add_option("--data", data_path, "Dataset cache (corrupted)")->required();
    fw_cmd->add_option("--manifest", manifest_path, "Corruption manifest CSV")->required();
    fw_cmd->add_option("--channel", channel, "Channel name")->required();
    fw_cmd->add_option("--out", fw_out, "Histogram CSV")->required();
    fw_cmd->add_option("--bins", bins, "Bins over [0, 1]")->capture_default_str();
    fw_cmd->add_flag("--corrupted-only", corrupted_only, "Skip examples left entirely clean");

    std::string grid_config, grid_out;
    std::size_t jobs = 1;
    bool in_process = false, list_cells = false;
    auto* grid_cmd = app.add_subcommand("grid", "Run every cell of a grid config and print the table");
    grid_cmd->add_option("--config", grid_config, "Grid YAML")->required();
    grid_cmd->add_option("--out", grid_out, "Output directory")->required();
    grid_cmd->add_option("--jobs", jobs, "Parallel runs")->capture_default_str();
    grid_cmd->add_flag("--in-process", in_process, "Run cells in this process instead of one process each");
    grid_cmd->add_flag("--list", list_cells, "Print the expanded cells without running them");

    std::string report_in, format = "md";
    auto* report_cmd = app.add_subcommand("report", "Aggregate run.json files into a table");
    report_cmd->add_option("--in", report_in, "Directory to scan")->required();
    report_cmd->add_option("--format", format, "csv or md")->check(CLI::IsMember({"csv", "md"}))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(kUsage, e.what());
    }

    try {
        if (*prepare_cmd) return prepare_data(prep);
        if (*corrupt_cmd) return corrupt(spec_path, in_path, out_path, manifest_path, corrupt_seed);
        if (*train_cmd) return train(train_config, train_seed);
        if (*eval_cmd) return eval(checkpoint, data_path, split_name);
        if (*fw_cmd) return fwdist(checkpoint, data_path, manifest_path, channel, fw_out, bins, corrupted_only);
        if (*grid_cmd) return grid(grid_config, grid_out, jobs, in_process, list_cells);
        if (*report_cmd) return report(report_in, format);
    } catch (const CliError& e) {
        return report_error(e.code, e.what());
    } catch (const harness::ConfigError& e) {
        return report_error(kConfig, e.what());
    } catch (const data::DataError& e) {
        return report_error(kData, e.what());
    } catch (const harness::TrainingAborted& e) {
        return report_error(kAborted, e.what());
    } catch (const std::exception& e) {
        return report_error(kRuntime, e.what());
    }
    return kUsage;
}
