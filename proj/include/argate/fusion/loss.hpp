#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "argate/fusion/model.hpp"

namespace argate::fusion {

/// Thrown when a loss term stops being finite; `term` names it.
class NonFiniteLoss : public std::runtime_error {
public:
    NonFiniteLoss(std::string term, double value);
    const std::string& term() const { return term_; }

private:
    std::string term_;
};

/// exp(-L^2): in (0, 1], decreasing in the loss.
Var loss_affinity(Var aux_losses);

/// softmax(sigmoid(exp(-L^2))) per row. aux_losses: [B, K].
Var fusion_target_fixed(Var aux_losses);
/// softmax(dln(exp(-L^2))) per row.
Var fusion_target_lattice(Tape& tape, Var aux_losses, const lattice::LatticeNetwork& net);

std::vector<double> fusion_target_fixed(std::span<const double> aux_losses);
std::vector<double> fusion_target_lattice(std::span<const double> aux_losses, const lattice::LatticeNetwork& net);

struct LossTerms {
    Var total;
    Var main;
    std::optional<Var> weighted_aux;
    std::optional<Var> regularizer;
};

/// Batch means of
///   main + alpha * sum_k w_k * aux_k + beta * sum_k (w_k - t_k)^2.
/// Inputs are per example: main [B], aux [B, K], weights [B, K], targets [B, K].
/// Weights enter the alpha term detached unless `detach_weights` is false.
/// Targets are used as given; the caller decides whether they carry gradient.
LossTerms total_loss(Var main_losses, std::optional<Var> aux_losses, std::optional<Var> weights,
                     std::optional<Var> targets, double alpha, double beta, bool detach_weights = true);

/// Throws NonFiniteLoss naming the first non-finite term.
void check_finite(const LossTerms& terms);

/// Full training objective for a batch, dispatched on the model variant.
struct BatchLoss {
    LossTerms terms;
    ForwardResult forward;
    std::optional<Var> targets;
};
BatchLoss training_loss(Tape& tape, const FusionModel& model, std::span<const Tensor> inputs,
                        std::span<const std::size_t> labels);

}  // namespace argate::fusion
