#include "argate/harness/grid.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <map>

extern char** environ;

namespace argate::harness {

namespace fs = std::filesystem;

namespace {

fs::path run_dir_of(const ExperimentConfig& config, std::uint64_t seed) {
    return config.output_dir / ("seed-" + std::to_string(seed));
}

std::string cell_name(const ExperimentConfig& c) {
    std::string name = fusion::to_string(c.model.variant) + "__" + corruption_label(c.corruption);
    if (c.corruption) name += "__" + failure_label(c.corruption);
    for (char& ch : name) {
        if (ch == '(' || ch == ')' || ch == ',' || ch == '=') ch = '_';
    }
    return name;
}

std::string last_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    return last;
}

struct Job {
    const ExperimentConfig* config;
    std::uint64_t seed;
};

pid_t spawn_run(const GridOptions& options, const fs::path& config_path, const Job& job) {
    const auto dir = run_dir_of(*job.config, job.seed);
    fs::create_directories(dir);
    const std::string log = (dir / "process.log").string();
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
    const std::string exe = options.executable.string(), cfg = config_path.string(), seed = std::to_string(job.seed);
    std::vector<char*> argv{const_cast<char*>(exe.c_str()), const_cast<char*>("train"),
                            const_cast<char*>("--config"),  const_cast<char*>(cfg.c_str()),
                            const_cast<char*>("--seed"),    const_cast<char*>(seed.c_str()),
                            nullptr};
    pid_t pid = -1;
    const int rc = posix_spawn(&pid, exe.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) return -1;
    return pid;
}

// Child exited without leaving a record behind: write one from its log.
void record_process_failure(const Job& job, int status) {
    const auto dir = run_dir_of(*job.config, job.seed);
    if (fs::exists(dir / "run.json")) return;
    std::string why = last_line(dir / "process.log");
    if (why.empty()) {
        why = WIFSIGNALED(status) ? "killed by signal " + std::to_string(WTERMSIG(status))
                                  : "exit status " + std::to_string(WEXITSTATUS(status));
    }
    write_run_record(dir / "run.json", failed_run_record(*job.config, job.seed, why));
}

}  // namespace

RunRecord run_experiment_seed(const ExperimentConfig& config, std::uint64_t seed) {
    const auto dir = run_dir_of(config, seed);
    RunRecord record;
    try {
        fs::create_directories(dir);
        save_experiment_config(dir / "config.yaml", config);
        const auto data = prepare_data(config, seed);
        auto trained = train_model(config, seed, data, {dir, true});
        record = make_run_record(config, trained.result);
        if (!config.analysis_channel.empty() && fusion::is_gating(config.model.variant) && data.corruption) {
            record.histogram = fusion_weight_histogram(*trained.model, data.split.test,
                                                       data.corruption->split(corruption::Phase::Test),
                                                       config.analysis_channel, config.histogram_bins,
                                                       Conditioning::CorruptedExamples);
        }
    } catch (const std::exception& e) {
        record = failed_run_record(config, seed, e.what());
    }
    write_run_record(dir / "run.json", record);
    return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
    std::vector<RunRecord> out;
    for (auto seed : config.seeds) out.push_back(run_experiment_seed(config, seed));
    return out;
}

GridConfig load_grid_config(const fs::path& path) {
    YAML::Node node;
    try {
        node = YAML::LoadFile(path.string());
    } catch (const YAML::BadFile&) {
        throw ConfigError(path.string() + ": cannot read config");
    } catch (const YAML::Exception& e) {
        throw ConfigError(path.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    GridConfig grid;
    if (!node["grid"]) {
        grid.base = parse_experiment_config(node);
        return grid;
    }
    if (!node["base"]) throw ConfigError("grid config needs a 'base' experiment");
    grid.base = parse_experiment_config(node["base"]);
    const auto g = node["grid"];
    for (const auto& key : g) {
        const auto name = key.first.as<std::string>();
        if (name != "variants" && name != "corruptions" && name != "failures") {
            throw ConfigError("grid: unknown key '" + name + "'");
        }
    }
    const auto sequence = [&](const char* key) {
        const auto seq = g[key];
        if (seq && !seq.IsSequence()) throw ConfigError(std::string("grid.") + key + ": expected a list");
        return seq;
    };
    if (const auto seq = sequence("variants")) {
        grid.variants.emplace();
        for (const auto& v : seq) grid.variants->push_back(fusion::parse_variant(v.as<std::string>()));
    }
    if (const auto seq = sequence("corruptions")) {
        grid.corruptions.emplace();
        for (const auto& c : seq) {
            if (c.IsMap() && c["seed"]) throw ConfigError("grid.corruptions: set the corruption seed in base");
            YAML::Node wrapper;
            wrapper["corruption"] = YAML::Node(c);
            grid.corruptions->push_back(parse_experiment_config(wrapper).corruption);
        }
    }
    if (const auto seq = sequence("failures")) {
        grid.failures.emplace();
        for (const auto& f : seq) grid.failures->push_back(corruption::parse_failure_kind(f.as<std::string>()));
    }
    return grid;
}

std::vector<ExperimentConfig> expand_grid(const GridConfig& grid, const fs::path& out) {
    const auto variants = grid.variants.value_or(std::vector{grid.base.model.variant});
    const auto corruptions = grid.corruptions.value_or(std::vector{grid.base.corruption});
    std::vector<ExperimentConfig> cells;
    for (auto variant : variants) {
        for (const auto& setting : corruptions) {
            std::vector<std::optional<corruption::CorruptionSpec>> specs;
            if (!setting || !grid.failures) {
                specs.push_back(setting);
            } else {
                for (auto kind : *grid.failures) {
                    auto spec = *setting;
                    spec.failure.kind = kind;
                    specs.push_back(spec);
                }
            }
            for (const auto& spec : specs) {
                ExperimentConfig cell = grid.base;
                cell.model.variant = variant;
                cell.corruption = spec;
                if (spec && grid.base.corruption_seed_fixed) cell.corruption->seed = grid.base.corruption->seed;
                cell.name = cell_name(cell);
                cell.output_dir = out / cell.name;
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::vector<ReportRow> run_experiment_grid(const std::vector<ExperimentConfig>& cells, const GridOptions& options) {
    std::vector<Job> jobs;
    for (const auto& cell : cells)
        for (auto seed : cell.seeds) jobs.push_back({&cell, seed});

    if (options.executable.empty()) {
        for (const auto& job : jobs) run_experiment_seed(*job.config, job.seed);
    } else {
        std::map<const ExperimentConfig*, fs::path> config_paths;
        for (const auto& cell : cells) {
            fs::create_directories(cell.output_dir);
            config_paths[&cell] = cell.output_dir / "config.yaml";
            save_experiment_config(config_paths[&cell], cell);
        }
        std::map<pid_t, Job> running;
        std::size_t next = 0;
        const std::size_t limit = std::max<std::size_t>(options.jobs, 1);
        while (next < jobs.size() || !running.empty()) {
            while (next < jobs.size() && running.size() < limit) {
                const Job& job = jobs[next++];
                const pid_t pid = spawn_run(options, config_paths[job.config], job);
                if (pid < 0) {
                    write_run_record(run_dir_of(*job.config, job.seed) / "run.json",
                                     failed_run_record(*job.config, job.seed, "could not start " +
                                                                                  options.executable.string()));
                    continue;
                }
                running.emplace(pid, job);
            }
            if (running.empty()) continue;
            int status = 0;
            const pid_t done = waitpid(-1, &status, 0);
            if (done < 0) break;
            const auto it = running.find(done);
            if (it == running.end()) continue;
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) record_process_failure(it->second, status);
            running.erase(it);
        }
    }

    std::vector<RunRecord> records;
    for (const auto& job : jobs) {
        const auto path = run_dir_of(*job.config, job.seed) / "run.json";
        records.push_back(fs::exists(path) ? read_run_record(path)
                                           : failed_run_record(*job.config, job.seed, "run left no record"));
    }
    return aggregate(records);
}

}  // namespace argate::harness
