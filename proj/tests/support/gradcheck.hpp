#pragma once

// Central finite-difference oracle. Independent of the backward pass: it only
// calls forward evaluation with perturbed leaf values.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "argate/diffcore/ops.hpp"
#include "argate/diffcore/parameter.hpp"
#include "argate/random.hpp"

namespace argate::testing {

using diffcore::Parameter;
using diffcore::Tape;
using diffcore::Tensor;
using diffcore::Var;

/// Builds an output from leaf variables. The checker reduces it to a scalar
/// with a fixed random projection so every output element contributes.
using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheck {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
};

inline double projected_output(const GraphFn& f, std::vector<Parameter>& leaves, const std::vector<double>& proj,
                               std::vector<double>* proj_out = nullptr, std::uint64_t proj_seed = 0) {
    Tape tape;
    std::vector<Var> vars;
    for (auto& p : leaves) vars.push_back(diffcore::param(tape, p));
    const Var out = f(tape, vars);
    if (proj_out) {
        Rng rng(proj_seed);
        proj_out->resize(out.value().size());
        for (auto& w : *proj_out) w = rng.uniform(-1.0, 1.0);
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < out.value().size(); ++i) s += proj[i] * out.value()[i];
    return s;
}

/// Relative error is ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8),
/// maximised over leaves.
inline GradCheck check_gradients(const GraphFn& f, const std::vector<Tensor>& inputs, std::uint64_t seed,
                                 double h = 1e-5) {
    std::vector<Parameter> leaves;
    leaves.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) leaves.emplace_back("x" + std::to_string(i), inputs[i]);

    std::vector<double> proj;
    projected_output(f, leaves, proj, &proj, seed);

    // Analytic.
    Tape tape;
    std::vector<Var> vars;
    for (auto& p : leaves) vars.push_back(diffcore::param(tape, p));
    const Var out = f(tape, vars);
    const Var loss = diffcore::sum(diffcore::mul(out, diffcore::constant(tape, Tensor(out.shape(), proj))));
    const auto grads = diffcore::backward(tape, loss.id());

    GradCheck result;
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        const Tensor analytic = grads.has(vars[k].id()) ? grads.of(vars[k].id()) : Tensor(inputs[k].shape());
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double orig = leaves[k].value[i];
            leaves[k].value[i] = orig + h;
            const double up = projected_output(f, leaves, proj);
            leaves[k].value[i] = orig - h;
            const double down = projected_output(f, leaves, proj);
            leaves[k].value[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double d = analytic[i] - numeric;
            diff2 += d * d;
            a2 += analytic[i] * analytic[i];
            n2 += numeric * numeric;
            result.max_abs_error = std::max(result.max_abs_error, std::abs(d));
        }
        const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
        result.max_rel_error = std::max(result.max_rel_error, std::sqrt(diff2) / denom);
    }
    return result;
}

/// Same error measure, but the leaves are the parameters of a model. `loss`
/// must build a scalar from the parameters bound on the given tape.
inline GradCheck check_parameter_gradients(diffcore::ParameterSet& params, const std::function<Var(Tape&)>& loss,
                                           double h = 1e-5) {
    const auto evaluate = [&] {
        Tape tape;
        return loss(tape).value().item();
    };
    params.zero_grad();
    {
        Tape tape;
        diffcore::backward_into_parameters(tape, loss(tape).id());
    }
    GradCheck result;
    for (Parameter* p : params.all()) {
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double orig = p->value[i];
            p->value[i] = orig + h;
            const double up = evaluate();
            p->value[i] = orig - h;
            const double down = evaluate();
            p->value[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double d = p->grad[i] - numeric;
            diff2 += d * d;
            a2 += p->grad[i] * p->grad[i];
            n2 += numeric * numeric;
            result.max_abs_error = std::max(result.max_abs_error, std::abs(d));
        }
        const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
        result.max_rel_error = std::max(result.max_rel_error, std::sqrt(diff2) / denom);
    }
    return result;
}

inline Tensor random_tensor(Rng& rng, diffcore::Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// Values bounded away from zero, for ops with a kink at the origin.
inline Tensor random_away_from_zero(Rng& rng, diffcore::Shape shape, double margin = 0.05) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) {
        const double mag = rng.uniform(margin, 1.0);
        v = rng.uniform01() < 0.5 ? -mag : mag;
    }
    return t;
}

}  // namespace argate::testing
