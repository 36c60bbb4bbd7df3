#include "argate/fusion/loss.hpp"

#include <cmath>

namespace argate::fusion {

using namespace diffcore;

NonFiniteLoss::NonFiniteLoss(std::string term, double value)
    : std::runtime_error("non-finite loss term '" + term + "' (value " + std::to_string(value) + ")"),
      term_(std::move(term)) {}

Var loss_affinity(Var aux_losses) { return exp(neg(square(aux_losses))); }

Var fusion_target_fixed(Var aux_losses) { return softmax(sigmoid(loss_affinity(aux_losses))); }

Var fusion_target_lattice(Tape& tape, Var aux_losses, const lattice::LatticeNetwork& net) {
    return softmax(net.apply(tape, loss_affinity(aux_losses)));
}

namespace {

Tensor row(std::span<const double> values) { return Tensor({1, values.size()}, {values.begin(), values.end()}); }

std::vector<double> values_of(Var v) { return {v.value().values().begin(), v.value().values().end()}; }

}  // namespace

std::vector<double> fusion_target_fixed(std::span<const double> aux_losses) {
    Tape tape;
    return values_of(fusion_target_fixed(constant(tape, row(aux_losses))));
}

std::vector<double> fusion_target_lattice(std::span<const double> aux_losses, const lattice::LatticeNetwork& net) {
    Tape tape;
    return values_of(fusion_target_lattice(tape, constant(tape, row(aux_losses)), net));
}

LossTerms total_loss(Var main_losses, std::optional<Var> aux_losses, std::optional<Var> weights,
                     std::optional<Var> targets, double alpha, double beta, bool detach_weights) {
    if (main_losses.value().rank() != 1) throw ShapeError("total_loss: main losses must be [B]");
    LossTerms terms;
    terms.main = mean(main_losses);
    terms.total = terms.main;
    if (aux_losses) {
        if (!weights) throw std::invalid_argument("total_loss: auxiliary losses need fusion weights");
        const Var w = detach_weights ? stop_gradient(*weights) : *weights;
        terms.weighted_aux = scale(mean(sum(w * *aux_losses, 1)), alpha);
        terms.total = terms.total + *terms.weighted_aux;
    }
    if (targets) {
        if (!weights) throw std::invalid_argument("total_loss: fusion targets need fusion weights");
        terms.regularizer = scale(mean(sum(square(*weights - *targets), 1)), beta);
        terms.total = terms.total + *terms.regularizer;
    }
    return terms;
}

void check_finite(const LossTerms& terms) {
    const auto check = [](const char* name, const std::optional<Var>& v) {
        if (v && !std::isfinite(v->value().item())) throw NonFiniteLoss(name, v->value().item());
    };
    check("main", terms.main);
    check("weighted_aux", terms.weighted_aux);
    check("regularizer", terms.regularizer);
    check("total", terms.total);
}

BatchLoss training_loss(Tape& tape, const FusionModel& model, std::span<const Tensor> inputs,
                        std::span<const std::size_t> labels) {
    const auto& config = model.config();
    BatchLoss out;
    out.forward = model.forward(tape, inputs, true);
    const Var main = softmax_cross_entropy(out.forward.logits, labels);

    std::optional<Var> aux;
    if (has_aux(config.variant)) {
        const std::size_t batch = labels.size();
        std::vector<Var> columns;
        for (const Var& logits : out.forward.aux_logits) {
            columns.push_back(reshape(softmax_cross_entropy(logits, labels), {batch, 1}));
        }
        aux = concat(columns, 1);
    }
    const auto& policy = config.gradients;
    if (config.variant == Variant::ArgatePlus) {
        const Var t = fusion_target_fixed(*aux);
        out.targets = policy.detach_fixed_target ? stop_gradient(t) : t;
    } else if (config.variant == Variant::ArgateL) {
        const Var source = policy.detach_aux_into_lattice ? stop_gradient(*aux) : *aux;
        out.targets = fusion_target_lattice(tape, source, *model.target_network());
    }
    out.terms = total_loss(main, aux, out.forward.weights, out.targets, config.alpha, config.beta,
                           policy.detach_weights_in_alw);
    return out;
}

}  // namespace argate::fusion
