#pragma once

#include <string>
#include <vector>

#include "argate/lattice/network.hpp"

namespace argate::fusion {

enum class Variant { Baseline, NetGated, ArgateWs, ArgatePlus, ArgateL };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);
const std::vector<Variant>& all_variants();

inline bool is_gating(Variant v) { return v != Variant::Baseline; }
inline bool has_aux(Variant v) { return v == Variant::ArgateWs || v == Variant::ArgatePlus || v == Variant::ArgateL; }
inline bool has_target(Variant v) { return v == Variant::ArgatePlus || v == Variant::ArgateL; }

/// Per-modality encoder. Series long enough for two conv/pool stages use
/// conv(c1,k)-relu-pool-conv(c2,k)-relu-pool-fc; shorter ones fall back to
/// fc(dense_hidden)-relu-fc.
struct EncoderSpec {
    std::size_t conv1_channels = 16;
    std::size_t conv2_channels = 32;
    std::size_t kernel = 5;
    std::size_t pool = 2;
    std::size_t dense_hidden = 32;
    std::size_t feature_width = 64;
};

struct HeadSpec {
    std::size_t hidden = 0;  // 0: balance against the reference variant
    std::size_t reference_hidden = 128;
    std::size_t gate_hidden = 128;
    std::size_t aux_hidden = 64;
};

/// Which edges the training loss cuts.
struct GradientPolicy {
    bool detach_weights_in_alw = true;
    bool detach_fixed_target = true;
    bool detach_aux_into_lattice = true;
};

struct ModelConfig {
    Variant variant = Variant::ArgatePlus;
    std::vector<std::string> channels;
    std::size_t input_length = 0;
    std::size_t classes = 0;
    double alpha = 0.3;
    double beta = 1.0;
    EncoderSpec encoder;
    HeadSpec head;
    lattice::LatticeNetworkConfig lattice;
    GradientPolicy gradients;

    std::size_t modalities() const { return channels.size(); }
};

/// Throws std::invalid_argument with the offending field.
void validate(const ModelConfig& config);

bool uses_conv_encoder(const EncoderSpec& spec, std::size_t input_length);

}  // namespace argate::fusion
