#pragma once

#include <span>
#include <string>

#include "argate/diffcore/parameter.hpp"

namespace argate::diffcore {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

/// Applies one update to every parameter from its accumulated gradient.
/// Adam keeps per-parameter moments and step counts inside Parameter.
void optimizer_step(std::span<Parameter* const> params, const OptimizerConfig& config);

}  // namespace argate::diffcore
