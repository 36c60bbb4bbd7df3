#include <gtest/gtest.h>

#include <cmath>

#include "argate/diffcore/optimizer.hpp"

namespace argate::diffcore {
namespace {

TEST(Optimizer, ZeroGradientLeavesParametersUnchanged) {
    for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam}) {
        Parameter p("w", Tensor::vector({1.0, -2.0, 3.0}));
        Parameter* params[] = {&p};
        optimizer_step(params, {.kind = kind, .learning_rate = 0.1});
        EXPECT_EQ(p.value, Tensor::vector({1.0, -2.0, 3.0}));
    }
}

TEST(Optimizer, SgdFollowsDefinition) {
    Parameter p("w", Tensor::scalar(1.0));
    p.grad[0] = 0.5;
    Parameter* params[] = {&p};
    optimizer_step(params, {.kind = OptimizerKind::Sgd, .learning_rate = 0.1});
    EXPECT_DOUBLE_EQ(p.value.item(), 0.95);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
    const double lr = 1e-3;
    for (double g : {0.5, -3.0, 1e-4, 42.0}) {
        Parameter p("w", Tensor::scalar(0.0));
        p.grad[0] = g;
        Parameter* params[] = {&p};
        optimizer_step(params, {.kind = OptimizerKind::Adam, .learning_rate = lr});
        // m_hat = g, v_hat = g^2 after bias correction.
        const double oracle = -lr * g / (std::sqrt(g * g) + 1e-8);
        EXPECT_NEAR(p.value.item(), oracle, 1e-15);
        EXPECT_NEAR(p.value.item(), -lr * (g > 0 ? 1.0 : -1.0), 1e-3 * lr);
    }
}

TEST(Optimizer, RejectsNonPositiveLearningRate) {
    Parameter p("w", Tensor::scalar(1.0));
    Parameter* params[] = {&p};
    EXPECT_THROW(optimizer_step(params, {.kind = OptimizerKind::Sgd, .learning_rate = 0.0}), std::invalid_argument);
    EXPECT_THROW(optimizer_step(params, {.kind = OptimizerKind::Adam, .learning_rate = -1.0}), std::invalid_argument);
}

TEST(Optimizer, StepBumpsVersion) {
    Parameter p("w", Tensor::scalar(1.0));
    Parameter* params[] = {&p};
    const auto before = p.version;
    optimizer_step(params, {});
    EXPECT_GT(p.version, before);
}

}  // namespace
}  // namespace argate::diffcore
