#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "argate/diffcore/ops.hpp"
#include "argate/diffcore/parameter.hpp"
#include "argate/fusion/config.hpp"
#include "argate/lattice/network.hpp"
#include "argate/random.hpp"

namespace argate::fusion {

using diffcore::Parameter;
using diffcore::ParameterSet;
using diffcore::Tape;
using diffcore::Tensor;
using diffcore::Var;

/// Raised when a batch does not carry exactly the configured modalities.
class MissingModality : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ForwardResult {
    Var logits;                     // [B, C]
    std::optional<Var> weights;     // [B, K], gating variants only
    std::vector<Var> aux_logits;    // K x [B, C], aux variants in training mode only
    std::vector<Var> features;      // K x [B, F]
};

/// Parameter names: `enc.<k>.*` encoders, `gate.*` FC-con, `head.*` classifier,
/// `aux.<k>.*` auxiliary heads, `dln.*` target network. Only the first three
/// groups are needed at inference.
class FusionModel {
public:
    FusionModel(ModelConfig config, Rng& rng);

    const ModelConfig& config() const { return config_; }
    ParameterSet& parameters() { return params_; }
    const ParameterSet& parameters() const { return params_; }
    std::size_t head_hidden() const { return head_hidden_; }

    const lattice::LatticeNetwork* target_network() const { return dln_.get(); }
    lattice::LatticeNetwork* target_network() { return dln_.get(); }

    /// modality k: [B, L] -> [B, F]
    Var encode(Tape& tape, std::size_t k, Var series) const;
    /// K features -> [B, K] weights (sigmoid then softmax of FC-con outputs).
    Var fusion_weights(Tape& tape, std::span<const Var> features) const;
    /// FC-con logits before normalization, [B, K].
    Var gate_logits(Tape& tape, std::span<const Var> features) const;
    /// Mean (baseline) or weighted sum of features, then the classifier head.
    Var classify(Tape& tape, std::span<const Var> features, std::optional<Var> weights) const;
    Var aux_logits(Tape& tape, std::size_t k, Var feature) const;

    /// inputs: one [B, L] tensor per modality in config order.
    ForwardResult forward(Tape& tape, std::span<const Tensor> inputs, bool training) const;

    /// Main-model parameters only (encoders, gate, head).
    std::vector<Parameter*> inference_parameters();
    static bool is_inference_parameter(const std::string& name);

    /// Restores inference parameters; training-only groups may be absent.
    void load_inference_weights(const std::map<std::string, Tensor>& tensors);

    /// Re-imposes lattice monotonicity after an optimizer step.
    void project();

private:
    void build_encoder(std::size_t k, Rng& rng);
    Parameter& dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

    ModelConfig config_;
    // Forward passes bind parameters on a tape, which accumulates into grads.
    mutable ParameterSet params_;
    std::size_t head_hidden_ = 0;
    bool conv_encoder_ = true;
    std::unique_ptr<lattice::LatticeNetwork> dln_;
};

Var dense_layer(Tape& tape, Var x, ParameterSet& params, const std::string& name);

/// Trainable parameter count of a fully built model (aux and lattice included).
std::size_t count_parameters(const ModelConfig& config);

/// Head width giving a parameter count closest to the reference variant
/// (ARGate-L at head.reference_hidden).
std::size_t balanced_head_width(const ModelConfig& config);

}  // namespace argate::fusion
