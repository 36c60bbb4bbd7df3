#include "argate/fusion/model.hpp"

#include <cmath>

namespace argate::fusion {

using namespace diffcore;

namespace {

Parameter& uniform_init(ParameterSet& params, const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
    Parameter& p = params.add(name, Tensor(std::move(shape)));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : p.value.values()) v = rng.uniform(-bound, bound);
    return p;
}

std::size_t conv_output_length(const EncoderSpec& e, std::size_t length) {
    const std::size_t first = (length - e.kernel + 1) / e.pool;
    return (first - e.kernel + 1) / e.pool;
}

}  // namespace

Var dense_layer(Tape& tape, Var x, ParameterSet& params, const std::string& name) {
    return matmul(x, param(tape, params.at(name + ".weight"))) + param(tape, params.at(name + ".bias"));
}

Parameter& FusionModel::dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    Parameter& w = uniform_init(params_, name + ".weight", {in, out}, in, rng);
    params_.add(name + ".bias", Tensor({out}));
    return w;
}

void FusionModel::build_encoder(std::size_t k, Rng& rng) {
    const auto& e = config_.encoder;
    const std::string prefix = "enc." + std::to_string(k);
    if (conv_encoder_) {
        uniform_init(params_, prefix + ".conv1.weight", {e.conv1_channels, 1, e.kernel}, e.kernel, rng);
        params_.add(prefix + ".conv1.bias", Tensor({e.conv1_channels}));
        uniform_init(params_, prefix + ".conv2.weight", {e.conv2_channels, e.conv1_channels, e.kernel},
                     e.conv1_channels * e.kernel, rng);
        params_.add(prefix + ".conv2.bias", Tensor({e.conv2_channels}));
        dense(prefix + ".fc", e.conv2_channels * conv_output_length(e, config_.input_length), e.feature_width, rng);
    } else {
        dense(prefix + ".fc0", config_.input_length, e.dense_hidden, rng);
        dense(prefix + ".fc", e.dense_hidden, e.feature_width, rng);
    }
}

FusionModel::FusionModel(ModelConfig config, Rng& rng) : config_(std::move(config)) {
    validate(config_);
    const std::size_t k = config_.modalities(), f = config_.encoder.feature_width;
    conv_encoder_ = uses_conv_encoder(config_.encoder, config_.input_length);
    head_hidden_ = config_.head.hidden ? config_.head.hidden : balanced_head_width(config_);
    config_.head.hidden = head_hidden_;

    for (std::size_t m = 0; m < k; ++m) build_encoder(m, rng);
    if (is_gating(config_.variant)) {
        dense("gate.fc1", k * f, config_.head.gate_hidden, rng);
        dense("gate.fc2", config_.head.gate_hidden, k, rng);
    }
    dense("head.fc1", f, head_hidden_, rng);
    dense("head.fc2", head_hidden_, config_.classes, rng);
    if (has_aux(config_.variant)) {
        for (std::size_t m = 0; m < k; ++m) {
            dense("aux." + std::to_string(m) + ".fc1", f, config_.head.aux_hidden, rng);
            dense("aux." + std::to_string(m) + ".fc2", config_.head.aux_hidden, config_.classes, rng);
        }
    }
    if (config_.variant == Variant::ArgateL) {
        dln_ = std::make_unique<lattice::LatticeNetwork>(params_, "dln", k, config_.lattice, rng);
    }
}

Var FusionModel::encode(Tape& tape, std::size_t k, Var series) const {
    const auto& s = series.shape();
    if (s.size() != 2 || s[1] != config_.input_length) {
        throw ShapeError("encoder " + std::to_string(k) + ": expected [B, " + std::to_string(config_.input_length) +
                         "], got " + diffcore::to_string(s));
    }
    const std::string prefix = "enc." + std::to_string(k);
    if (!conv_encoder_) {
        return relu(dense_layer(tape, relu(dense_layer(tape, series, params_, prefix + ".fc0")), params_,
                                prefix + ".fc"));
    }
    const std::size_t batch = s[0];
    const auto& e = config_.encoder;
    Var x = reshape(series, {batch, 1, config_.input_length});
    x = conv1d(x, param(tape, params_.at(prefix + ".conv1.weight")), param(tape, params_.at(prefix + ".conv1.bias")));
    x = maxpool1d(relu(x), e.pool);
    x = conv1d(x, param(tape, params_.at(prefix + ".conv2.weight")), param(tape, params_.at(prefix + ".conv2.bias")));
    x = maxpool1d(relu(x), e.pool);
    x = reshape(x, {batch, x.shape()[1] * x.shape()[2]});
    return relu(dense_layer(tape, x, params_, prefix + ".fc"));
}

Var FusionModel::gate_logits(Tape& tape, std::span<const Var> features) const {
    if (!is_gating(config_.variant)) throw std::logic_error("baseline model has no fusion weights");
    const Var joined = concat(features, 1);
    return dense_layer(tape, relu(dense_layer(tape, joined, params_, "gate.fc1")), params_, "gate.fc2");
}

Var FusionModel::fusion_weights(Tape& tape, std::span<const Var> features) const {
    return softmax(sigmoid(gate_logits(tape, features)));
}

Var FusionModel::classify(Tape& tape, std::span<const Var> features, std::optional<Var> weights) const {
    Var fused = features[0];
    if (weights) {
        fused = slice(*weights, 1, 0, 1) * features[0];
        for (std::size_t k = 1; k < features.size(); ++k) fused = fused + slice(*weights, 1, k, k + 1) * features[k];
    } else {
        for (std::size_t k = 1; k < features.size(); ++k) fused = fused + features[k];
        fused = scale(fused, 1.0 / static_cast<double>(features.size()));
    }
    return dense_layer(tape, relu(dense_layer(tape, fused, params_, "head.fc1")), params_, "head.fc2");
}

Var FusionModel::aux_logits(Tape& tape, std::size_t k, Var feature) const {
    const std::string prefix = "aux." + std::to_string(k);
    return dense_layer(tape, relu(dense_layer(tape, feature, params_, prefix + ".fc1")), params_, prefix + ".fc2");
}

ForwardResult FusionModel::forward(Tape& tape, std::span<const Tensor> inputs, bool training) const {
    if (inputs.size() != config_.modalities()) {
        throw MissingModality("expected " + std::to_string(config_.modalities()) + " modalities, got " +
                              std::to_string(inputs.size()));
    }
    ForwardResult out;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        out.features.push_back(encode(tape, k, constant(tape, inputs[k])));
    }
    if (is_gating(config_.variant)) out.weights = fusion_weights(tape, out.features);
    out.logits = classify(tape, out.features, out.weights);
    if (training && has_aux(config_.variant)) {
        for (std::size_t k = 0; k < inputs.size(); ++k) out.aux_logits.push_back(aux_logits(tape, k, out.features[k]));
    }
    return out;
}

bool FusionModel::is_inference_parameter(const std::string& name) {
    return !(name.starts_with("aux.") || name.starts_with("dln."));
}

std::vector<Parameter*> FusionModel::inference_parameters() {
    std::vector<Parameter*> out;
    for (Parameter* p : params_.all()) {
        if (is_inference_parameter(p->name)) out.push_back(p);
    }
    return out;
}

void FusionModel::load_inference_weights(const std::map<std::string, Tensor>& tensors) {
    for (const auto& [name, value] : tensors) {
        Parameter* p = params_.find(name);
        if (!p) throw std::invalid_argument("checkpoint has unknown parameter '" + name + "'");
        if (p->value.shape() != value.shape()) {
            throw std::invalid_argument("checkpoint parameter '" + name + "' has shape " + diffcore::to_string(value.shape()) +
                                        ", model expects " + diffcore::to_string(p->value.shape()));
        }
    }
    for (Parameter* p : inference_parameters()) {
        const auto it = tensors.find(p->name);
        if (it == tensors.end()) throw std::invalid_argument("checkpoint is missing parameter '" + p->name + "'");
        p->value = it->second;
        p->touch();
    }
    for (Parameter* p : params_.all()) {
        if (is_inference_parameter(p->name)) continue;
        if (const auto it = tensors.find(p->name); it != tensors.end()) {
            p->value = it->second;
            p->touch();
        }
    }
}

void FusionModel::project() {
    if (dln_) dln_->project();
}

std::size_t count_parameters(const ModelConfig& config) {
    Rng rng(0);
    return FusionModel(config, rng).parameters().element_count();
}

std::size_t balanced_head_width(const ModelConfig& config) {
    ModelConfig ref = config;
    ref.variant = Variant::ArgateL;
    ref.head.hidden = config.head.reference_hidden;
    if (config.variant == Variant::ArgateL) return ref.head.hidden;
    const double target = static_cast<double>(count_parameters(ref));

    ModelConfig probe = config;
    probe.head.hidden = 1;
    const double at_one = static_cast<double>(count_parameters(probe));
    probe.head.hidden = 2;
    const double slope = static_cast<double>(count_parameters(probe)) - at_one;
    const double width = 1.0 + (target - at_one) / slope;
    return static_cast<std::size_t>(std::max(1.0, std::round(width)));
}

}  // namespace argate::fusion
