#include "argate/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>

namespace argate::harness {

namespace {

using corruption::CorruptionSpec;
using corruption::FixedAssignment;
using corruption::GenerationTestAssignment;
using corruption::RandomAssignment;

// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : node) {
        const auto key = item.first.as<std::string>();
        if (!ok.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    if (!node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception& e) {
        throw ConfigError(where + "." + key + ": " + e.msg);
    }
}

std::pair<std::size_t, std::size_t> read_range(const YAML::Node& node, const std::string& where) {
    if (!node.IsSequence() || node.size() != 2) throw ConfigError(where + ": expected [low, high]");
    const auto lo = node[0].as<std::size_t>(), hi = node[1].as<std::size_t>();
    if (lo > hi) throw ConfigError(where + ": low " + std::to_string(lo) + " exceeds high " + std::to_string(hi));
    return {lo, hi};
}

DatasetSpec parse_dataset(const YAML::Node& node) {
    const std::string where = "dataset";
    check_keys(node, where,
               {"kind", "path", "root", "window", "stride", "features", "driver_column", "train_fraction", "channels",
                "classes", "train_examples", "test_examples", "length", "informative", "noise", "seed"});
    DatasetSpec spec;
    const auto kind = node["kind"] ? node["kind"].as<std::string>() : std::string("synth");
    if (kind == "har") {
        spec.kind = DatasetKind::Har;
    } else if (kind == "driver") {
        spec.kind = DatasetKind::Driver;
    } else if (kind == "synth") {
        spec.kind = DatasetKind::Synth;
    } else if (kind == "cache") {
        spec.kind = DatasetKind::Cache;
    } else {
        throw ConfigError(where + ".kind: unknown dataset kind '" + kind + "'");
    }
    std::string path;
    read(node, "root", path, where);
    read(node, "path", path, where);
    spec.path = path;
    read(node, "window", spec.driver.window, where);
    read(node, "stride", spec.driver.stride, where);
    read(node, "features", spec.driver.features, where);
    read(node, "driver_column", spec.driver.driver_column, where);
    read(node, "train_fraction", spec.driver.train_fraction, where);
    read(node, "channels", spec.synth.channels, where);
    read(node, "classes", spec.synth.classes, where);
    read(node, "train_examples", spec.synth.examples, where);
    read(node, "test_examples", spec.synth_test_examples, where);
    read(node, "length", spec.synth.length, where);
    read(node, "informative", spec.synth.informative, where);
    read(node, "noise", spec.synth.noise, where);
    read(node, "seed", spec.synth.seed, where);
    if (spec.kind != DatasetKind::Synth && spec.path.empty()) throw ConfigError(where + ": path is required");
    return spec;
}

std::optional<CorruptionSpec> parse_corruption(const YAML::Node& node, bool& seed_fixed) {
    seed_fixed = false;
    if (!node || node.IsNull()) return std::nullopt;
    if (node.IsScalar()) {
        if (node.as<std::string>() == "clean") return std::nullopt;
        throw ConfigError("corruption: expected 'clean' or a mapping");
    }
    const std::string where = "corruption";
    check_keys(node, where,
               {"failure", "scheme", "n_rclean", "n_fclean", "channels", "preset", "train_failing", "test_failing",
                "clean_fraction", "seed"});
    CorruptionSpec spec;
    if (node["failure"]) spec.failure.kind = corruption::parse_failure_kind(node["failure"].as<std::string>());
    const auto scheme = node["scheme"] ? node["scheme"].as<std::string>() : std::string("random");
    if (scheme == "random") {
        RandomAssignment random;
        read(node, "n_rclean", random.clean_count, where);
        spec.scheme = random;
    } else if (scheme == "fixed") {
        FixedAssignment fixed;
        if (node["preset"]) fixed = corruption::fixed_preset(node["preset"].as<std::string>());
        read(node, "n_fclean", fixed.clean_count, where);
        read(node, "channels", fixed.corrupted, where);
        spec.scheme = fixed;
    } else if (scheme == "generation") {
        GenerationTestAssignment gen;
        if (node["train_failing"]) gen.train_failing = read_range(node["train_failing"], where + ".train_failing");
        if (node["test_failing"]) gen.test_failing = read_range(node["test_failing"], where + ".test_failing");
        spec.scheme = gen;
    } else {
        throw ConfigError(where + ".scheme: unknown scheme '" + scheme + "' (expected fixed, random or generation)");
    }
    read(node, "clean_fraction", spec.clean_fraction, where);
    if (node["seed"]) {
        spec.seed = node["seed"].as<std::uint64_t>();
        seed_fixed = true;
    }
    return spec;
}

void emit_model(YAML::Emitter& out, const fusion::ModelConfig& m, bool with_shape) {
    out << YAML::BeginMap;
    out << YAML::Key << "variant" << YAML::Value << fusion::to_string(m.variant);
    if (with_shape) {
        out << YAML::Key << "channels" << YAML::Value << YAML::Flow << m.channels;
        out << YAML::Key << "input_length" << YAML::Value << m.input_length;
        out << YAML::Key << "classes" << YAML::Value << m.classes;
    }
    out << YAML::Key << "alpha" << YAML::Value << m.alpha;
    out << YAML::Key << "beta" << YAML::Value << m.beta;
    out << YAML::Key << "encoder" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "conv1_channels" << YAML::Value << m.encoder.conv1_channels;
    out << YAML::Key << "conv2_channels" << YAML::Value << m.encoder.conv2_channels;
    out << YAML::Key << "kernel" << YAML::Value << m.encoder.kernel;
    out << YAML::Key << "pool" << YAML::Value << m.encoder.pool;
    out << YAML::Key << "dense_hidden" << YAML::Value << m.encoder.dense_hidden;
    out << YAML::Key << "feature_width" << YAML::Value << m.encoder.feature_width;
    out << YAML::EndMap;
    out << YAML::Key << "head" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "hidden" << YAML::Value << m.head.hidden;
    out << YAML::Key << "reference_hidden" << YAML::Value << m.head.reference_hidden;
    out << YAML::Key << "gate_hidden" << YAML::Value << m.head.gate_hidden;
    out << YAML::Key << "aux_hidden" << YAML::Value << m.head.aux_hidden;
    out << YAML::EndMap;
    out << YAML::Key << "lattice" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "input_keypoints" << YAML::Value << m.lattice.input_keypoints;
    out << YAML::Key << "embedding_dims" << YAML::Value << m.lattice.embedding_dims;
    out << YAML::Key << "hidden_keypoints" << YAML::Value << m.lattice.hidden_keypoints;
    out << YAML::Key << "lattice_vertices" << YAML::Value << m.lattice.lattice_vertices;
    out << YAML::Key << "cross_inputs" << YAML::Value << lattice::to_string(m.lattice.cross_inputs);
    out << YAML::Key << "init_jitter" << YAML::Value << m.lattice.init_jitter;
    out << YAML::EndMap;
    out << YAML::Key << "gradients" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "detach_weights_in_alw" << YAML::Value << m.gradients.detach_weights_in_alw;
    out << YAML::Key << "detach_fixed_target" << YAML::Value << m.gradients.detach_fixed_target;
    out << YAML::Key << "detach_aux_into_lattice" << YAML::Value << m.gradients.detach_aux_into_lattice;
    out << YAML::EndMap;
    out << YAML::EndMap;
}

void emit_corruption(YAML::Emitter& out, const CorruptionSpec& spec, bool seed_fixed) {
    out << YAML::BeginMap;
    out << YAML::Key << "failure" << YAML::Value << corruption::to_string(spec.failure.kind);
    if (const auto* fixed = std::get_if<FixedAssignment>(&spec.scheme)) {
        out << YAML::Key << "scheme" << YAML::Value << "fixed";
        out << YAML::Key << "n_fclean" << YAML::Value << fixed->clean_count;
        out << YAML::Key << "channels" << YAML::Value << YAML::Flow << fixed->corrupted;
    } else if (const auto* random = std::get_if<RandomAssignment>(&spec.scheme)) {
        out << YAML::Key << "scheme" << YAML::Value << "random";
        out << YAML::Key << "n_rclean" << YAML::Value << random->clean_count;
    } else {
        const auto& gen = std::get<GenerationTestAssignment>(spec.scheme);
        out << YAML::Key << "scheme" << YAML::Value << "generation";
        out << YAML::Key << "train_failing" << YAML::Value << YAML::Flow << YAML::BeginSeq << gen.train_failing.first
            << gen.train_failing.second << YAML::EndSeq;
        out << YAML::Key << "test_failing" << YAML::Value << YAML::Flow << YAML::BeginSeq << gen.test_failing.first
            << gen.test_failing.second << YAML::EndSeq;
    }
    out << YAML::Key << "clean_fraction" << YAML::Value << spec.clean_fraction;
    if (seed_fixed) out << YAML::Key << "seed" << YAML::Value << spec.seed;
    out << YAML::EndMap;
}

}  // namespace

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::Har: return "har";
        case DatasetKind::Driver: return "driver";
        case DatasetKind::Synth: return "synth";
        case DatasetKind::Cache: return "cache";
    }
    return "?";
}

fusion::ModelConfig parse_model_config(const YAML::Node& node) {
    const std::string where = "model";
    check_keys(node, where,
               {"variant", "channels", "input_length", "classes", "alpha", "beta", "encoder", "head", "lattice",
                "gradients"});
    fusion::ModelConfig m;
    if (node["variant"]) m.variant = fusion::parse_variant(node["variant"].as<std::string>());
    read(node, "channels", m.channels, where);
    read(node, "input_length", m.input_length, where);
    read(node, "classes", m.classes, where);
    read(node, "alpha", m.alpha, where);
    read(node, "beta", m.beta, where);
    if (const auto e = node["encoder"]) {
        check_keys(e, where + ".encoder",
                   {"conv1_channels", "conv2_channels", "kernel", "pool", "dense_hidden", "feature_width"});
        read(e, "conv1_channels", m.encoder.conv1_channels, where);
        read(e, "conv2_channels", m.encoder.conv2_channels, where);
        read(e, "kernel", m.encoder.kernel, where);
        read(e, "pool", m.encoder.pool, where);
        read(e, "dense_hidden", m.encoder.dense_hidden, where);
        read(e, "feature_width", m.encoder.feature_width, where);
    }
    if (const auto h = node["head"]) {
        check_keys(h, where + ".head", {"hidden", "reference_hidden", "gate_hidden", "aux_hidden"});
        read(h, "hidden", m.head.hidden, where);
        read(h, "reference_hidden", m.head.reference_hidden, where);
        read(h, "gate_hidden", m.head.gate_hidden, where);
        read(h, "aux_hidden", m.head.aux_hidden, where);
    }
    if (const auto l = node["lattice"]) {
        check_keys(l, where + ".lattice",
                   {"input_keypoints", "embedding_dims", "hidden_keypoints", "lattice_vertices", "cross_inputs",
                    "init_jitter"});
        read(l, "input_keypoints", m.lattice.input_keypoints, where);
        read(l, "embedding_dims", m.lattice.embedding_dims, where);
        read(l, "hidden_keypoints", m.lattice.hidden_keypoints, where);
        read(l, "lattice_vertices", m.lattice.lattice_vertices, where);
        if (l["cross_inputs"]) m.lattice.cross_inputs = lattice::parse_cross_inputs(l["cross_inputs"].as<std::string>());
        read(l, "init_jitter", m.lattice.init_jitter, where);
    }
    if (const auto g = node["gradients"]) {
        check_keys(g, where + ".gradients", {"detach_weights_in_alw", "detach_fixed_target", "detach_aux_into_lattice"});
        read(g, "detach_weights_in_alw", m.gradients.detach_weights_in_alw, where);
        read(g, "detach_fixed_target", m.gradients.detach_fixed_target, where);
        read(g, "detach_aux_into_lattice", m.gradients.detach_aux_into_lattice, where);
    }
    return m;
}

ExperimentConfig parse_experiment_config(const YAML::Node& node) {
    check_keys(node, "config", {"name", "dataset", "model", "corruption", "training", "analysis", "output_dir"});
    ExperimentConfig c;
    read(node, "name", c.name, "config");
    if (node["dataset"]) c.dataset = parse_dataset(node["dataset"]);
    if (node["model"]) c.model = parse_model_config(node["model"]);
    c.corruption = parse_corruption(node["corruption"], c.corruption_seed_fixed);
    if (const auto t = node["training"]) {
        const std::string where = "training";
        check_keys(t, where, {"seeds", "epochs", "batch_size", "optimizer"});
        read(t, "seeds", c.seeds, where);
        read(t, "epochs", c.epochs, where);
        read(t, "batch_size", c.batch_size, where);
        if (const auto o = t["optimizer"]) {
            check_keys(o, where + ".optimizer", {"kind", "learning_rate", "beta1", "beta2", "epsilon"});
            if (o["kind"]) c.optimizer.kind = diffcore::parse_optimizer_kind(o["kind"].as<std::string>());
            read(o, "learning_rate", c.optimizer.learning_rate, where);
            read(o, "beta1", c.optimizer.beta1, where);
            read(o, "beta2", c.optimizer.beta2, where);
            read(o, "epsilon", c.optimizer.epsilon, where);
        }
    }
    if (const auto a = node["analysis"]) {
        check_keys(a, "analysis", {"channel", "bins"});
        read(a, "channel", c.analysis_channel, "analysis");
        read(a, "bins", c.histogram_bins, "analysis");
    }
    std::string out;
    read(node, "output_dir", out, "config");
    if (!out.empty()) c.output_dir = out;
    if (c.batch_size == 0) throw ConfigError("training.batch_size must be positive");
    if (c.histogram_bins == 0) throw ConfigError("analysis.bins must be positive");
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    YAML::Node node;
    try {
        node = YAML::LoadFile(path.string());
    } catch (const YAML::BadFile&) {
        throw ConfigError(path.string() + ": cannot read config");
    } catch (const YAML::Exception& e) {
        throw ConfigError(path.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    return parse_experiment_config(node);
}

std::string model_to_yaml(const fusion::ModelConfig& model) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    emit_model(out, model, true);
    return std::string(out.c_str()) + "\n";
}

std::string to_yaml(const ExperimentConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << to_string(c.dataset.kind);
    const auto& d = c.dataset;
    if (d.kind != DatasetKind::Synth) out << YAML::Key << "path" << YAML::Value << d.path.string();
    if (d.kind == DatasetKind::Driver) {
        out << YAML::Key << "window" << YAML::Value << d.driver.window;
        out << YAML::Key << "stride" << YAML::Value << d.driver.stride;
        if (!d.driver.features.empty()) out << YAML::Key << "features" << YAML::Value << d.driver.features;
        out << YAML::Key << "driver_column" << YAML::Value << d.driver.driver_column;
        out << YAML::Key << "train_fraction" << YAML::Value << d.driver.train_fraction;
    }
    if (d.kind == DatasetKind::Synth) {
        out << YAML::Key << "channels" << YAML::Value << d.synth.channels;
        out << YAML::Key << "classes" << YAML::Value << d.synth.classes;
        out << YAML::Key << "train_examples" << YAML::Value << d.synth.examples;
        out << YAML::Key << "test_examples" << YAML::Value << d.synth_test_examples;
        out << YAML::Key << "length" << YAML::Value << d.synth.length;
        out << YAML::Key << "informative" << YAML::Value << YAML::Flow << d.synth.informative;
        out << YAML::Key << "noise" << YAML::Value << d.synth.noise;
        out << YAML::Key << "seed" << YAML::Value << d.synth.seed;
    }
    out << YAML::EndMap;
    out << YAML::Key << "model" << YAML::Value;
    emit_model(out, c.model, false);
    out << YAML::Key << "corruption" << YAML::Value;
    if (c.corruption) {
        emit_corruption(out, *c.corruption, c.corruption_seed_fixed);
    } else {
        out << "clean";
    }
    out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.seeds;
    out << YAML::Key << "epochs" << YAML::Value << c.epochs;
    out << YAML::Key << "batch_size" << YAML::Value << c.batch_size;
    out << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << diffcore::to_string(c.optimizer.kind);
    out << YAML::Key << "learning_rate" << YAML::Value << c.optimizer.learning_rate;
    out << YAML::Key << "beta1" << YAML::Value << c.optimizer.beta1;
    out << YAML::Key << "beta2" << YAML::Value << c.optimizer.beta2;
    out << YAML::Key << "epsilon" << YAML::Value << c.optimizer.epsilon;
    out << YAML::EndMap << YAML::EndMap;
    if (!c.analysis_channel.empty()) {
        out << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "channel" << YAML::Value << c.analysis_channel;
        out << YAML::Key << "bins" << YAML::Value << c.histogram_bins;
        out << YAML::EndMap;
    }
    out << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void save_experiment_config(const std::filesystem::path& path, const ExperimentConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config '" + path.string() + "'");
    out << to_yaml(config);
}

std::string corruption_label(const std::optional<corruption::CorruptionSpec>& spec) {
    if (!spec) return "clean";
    if (const auto* fixed = std::get_if<FixedAssignment>(&spec->scheme)) {
        return "fclean=" + std::to_string(fixed->clean_count);
    }
    if (const auto* random = std::get_if<RandomAssignment>(&spec->scheme)) {
        return "rclean=" + std::to_string(random->clean_count);
    }
    const auto& gen = std::get<GenerationTestAssignment>(spec->scheme);
    return "(" + std::to_string(gen.train_failing.first) + "," + std::to_string(gen.train_failing.second) + ")(" +
           std::to_string(gen.test_failing.first) + "," + std::to_string(gen.test_failing.second) + ")";
}

std::string failure_label(const std::optional<corruption::CorruptionSpec>& spec) {
    return spec ? corruption::to_string(spec->failure.kind) : "none";
}

}  // namespace argate::harness
