#include "argate/fusion/config.hpp"

#include <stdexcept>

namespace argate::fusion {

Variant parse_variant(const std::string& name) {
    for (Variant v : all_variants()) {
        if (to_string(v) == name) return v;
    }
    throw std::invalid_argument("unknown variant '" + name +
                                "' (expected baseline, netgated, argate_ws, argate_plus or argate_l)");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Baseline: return "baseline";
        case Variant::NetGated: return "netgated";
        case Variant::ArgateWs: return "argate_ws";
        case Variant::ArgatePlus: return "argate_plus";
        case Variant::ArgateL: return "argate_l";
    }
    return "?";
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> variants{Variant::Baseline, Variant::NetGated, Variant::ArgateWs,
                                               Variant::ArgatePlus, Variant::ArgateL};
    return variants;
}

bool uses_conv_encoder(const EncoderSpec& spec, std::size_t input_length) {
    if (spec.kernel == 0 || spec.pool == 0 || input_length < spec.kernel) return false;
    const std::size_t first = (input_length - spec.kernel + 1) / spec.pool;
    if (first < spec.kernel) return false;
    return (first - spec.kernel + 1) / spec.pool >= 1;
}

void validate(const ModelConfig& c) {
    const auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
    if (c.channels.empty()) fail("at least one channel is required");
    if (is_gating(c.variant) && c.channels.size() < 2) fail(to_string(c.variant) + " needs K >= 2 channels");
    if (c.input_length == 0) fail("input_length must be positive");
    if (c.classes < 2) fail("classes must be at least 2");
    if (!(c.alpha >= 0.0)) fail("alpha must be >= 0");
    if (!(c.beta >= 0.0)) fail("beta must be >= 0");
    const auto& e = c.encoder;
    if (e.feature_width == 0 || e.conv1_channels == 0 || e.conv2_channels == 0 || e.dense_hidden == 0) {
        fail("encoder widths must be positive");
    }
    if (c.head.reference_hidden == 0 || c.head.gate_hidden == 0 || c.head.aux_hidden == 0) {
        fail("head widths must be positive");
    }
}

}  // namespace argate::fusion
