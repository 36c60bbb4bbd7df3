#pragma once

#include "argate/fusion/model.hpp"

namespace argate::testing {

/// A model small enough for exhaustive checks: K channels of length 16.
inline fusion::ModelConfig tiny_config(fusion::Variant variant, std::size_t k = 3, std::size_t classes = 3) {
    fusion::ModelConfig c;
    c.variant = variant;
    for (std::size_t i = 0; i < k; ++i) c.channels.push_back("ch" + std::to_string(i));
    c.input_length = 16;
    c.classes = classes;
    c.encoder = {.conv1_channels = 2, .conv2_channels = 3, .kernel = 3, .pool = 2, .dense_hidden = 4,
                 .feature_width = 4};
    c.head = {.hidden = 5, .reference_hidden = 5, .gate_hidden = 6, .aux_hidden = 4};
    return c;
}

inline std::vector<diffcore::Tensor> random_inputs(Rng& rng, const fusion::ModelConfig& c, std::size_t batch) {
    std::vector<diffcore::Tensor> out;
    for (std::size_t k = 0; k < c.modalities(); ++k) {
        diffcore::Tensor t({batch, c.input_length});
        for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace argate::testing
