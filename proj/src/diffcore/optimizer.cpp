#include "argate/diffcore/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace argate::diffcore {

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

void optimizer_step(std::span<Parameter* const> params, const OptimizerConfig& config) {
    if (!(config.learning_rate > 0.0)) {
        throw std::invalid_argument("optimizer: learning rate must be positive, got " +
                                    std::to_string(config.learning_rate));
    }
    for (Parameter* p : params) {
        const std::size_t n = p->value.size();
        if (p->grad.size() != n) throw ShapeError("optimizer: gradient/value size mismatch for '" + p->name + "'");
        double* w = p->value.data();
        const double* g = p->grad.data();
        ++p->steps;
        if (config.kind == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < n; ++i) w[i] -= config.learning_rate * g[i];
        } else {
            if (p->first_moment.size() != n) {
                p->first_moment.assign(n, 0.0);
                p->second_moment.assign(n, 0.0);
            }
            const double b1 = config.beta1, b2 = config.beta2;
            const double t = static_cast<double>(p->steps);
            const double c1 = 1.0 - std::pow(b1, t);
            const double c2 = 1.0 - std::pow(b2, t);
            for (std::size_t i = 0; i < n; ++i) {
                double& m = p->first_moment[i];
                double& v = p->second_moment[i];
                m = b1 * m + (1.0 - b1) * g[i];
                v = b2 * v + (1.0 - b2) * g[i] * g[i];
                w[i] -= config.learning_rate * (m / c1) / (std::sqrt(v / c2) + config.epsilon);
            }
        }
        p->touch();
    }
}

}  // namespace argate::diffcore
