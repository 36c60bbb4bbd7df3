#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "argate/harness/config.hpp"

namespace argate::testing {

/// Four synthetic channels of length 16, two informative; trains in well
/// under a second per epoch.
inline harness::ExperimentConfig tiny_experiment(fusion::Variant variant = fusion::Variant::ArgatePlus) {
    harness::ExperimentConfig c;
    c.name = "tiny";
    c.dataset.kind = harness::DatasetKind::Synth;
    c.dataset.synth = {.channels = 4, .classes = 3, .examples = 120, .length = 16,
                       .informative = {1.0, 0.7}, .noise = 0.3, .seed = 5};
    c.dataset.synth_test_examples = 60;
    c.model.variant = variant;
    c.model.encoder = {.conv1_channels = 2, .conv2_channels = 3, .kernel = 3, .pool = 2, .dense_hidden = 4,
                       .feature_width = 4};
    c.model.head = {.hidden = 0, .reference_hidden = 6, .gate_hidden = 6, .aux_hidden = 4};
    c.seeds = {1};
    c.epochs = 2;
    c.batch_size = 16;
    c.optimizer.learning_rate = 1e-2;
    return c;
}

/// The same experiment as YAML, for file-driven entry points.
inline std::string tiny_experiment_yaml(const std::string& variant = "argate_plus") {
    return "name: tiny\n"
           "dataset: {kind: synth, channels: 4, classes: 3, train_examples: 120, test_examples: 60,\n"
           "          length: 16, informative: [1.0, 0.7], noise: 0.3, seed: 5}\n"
           "model:\n"
           "  variant: " + variant + "\n"
           "  encoder: {conv1_channels: 2, conv2_channels: 3, kernel: 3, pool: 2, dense_hidden: 4, feature_width: 4}\n"
           "  head: {hidden: 0, reference_hidden: 6, gate_hidden: 6, aux_hidden: 4}\n"
           "training:\n"
           "  seeds: [1]\n"
           "  epochs: 2\n"
           "  batch_size: 16\n"
           "  optimizer: {kind: adam, learning_rate: 0.01}\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace argate::testing
