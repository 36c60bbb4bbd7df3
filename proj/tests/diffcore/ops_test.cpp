#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "argate/diffcore/ops.hpp"
#include "../support/primitive_cases.hpp"

namespace argate::diffcore {
namespace {

TEST(Tensor, RejectsMismatchedValueCount) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
    EXPECT_THROW(Tensor({2, 0}), DomainError);
}

TEST(Ops, MatmulWithIdentityIsNoop) {
    Tape tape;
    const auto id = constant(tape, Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
    const auto a = constant(tape, Tensor::matrix(3, 3, {1, -2, 3, 4.5, 5, 6, -7, 8, 9}));
    EXPECT_EQ(matmul(id, a).value(), a.value());
}

TEST(Ops, MatmulShapeErrorNamesOpAndDims) {
    Tape tape;
    const auto a = constant(tape, Tensor({2, 3}));
    const auto b = constant(tape, Tensor({2, 3}));
    try {
        matmul(a, b);
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("matmul"), std::string::npos);
        EXPECT_NE(msg.find("[2, 3]"), std::string::npos);
    }
}

TEST(Ops, SigmoidAndSoftmaxSymmetry) {
    Tape tape;
    EXPECT_DOUBLE_EQ(sigmoid(constant(tape, Tensor::scalar(0.0))).value().item(), 0.5);
    const auto s = softmax(constant(tape, Tensor::vector({1.7, 1.7, 1.7, 1.7})));
    for (double v : s.value().values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Ops, IdentityKernelConvolutionIsNoop) {
    Tape tape;
    Tensor x({2, 1, 7});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i) - 0.3;
    const auto y = conv1d(constant(tape, x), constant(tape, Tensor({1, 1, 1}, {1.0})), constant(tape, Tensor({1})));
    EXPECT_EQ(y.value(), x);
}

TEST(Ops, ConvolutionMatchesDirectSum) {
    Tape tape;
    const Tensor x({1, 2, 5}, {1, 2, 3, 4, 5, -1, 0, 1, 0, -1});
    const Tensor w({1, 2, 2}, {1, -1, 2, 0.5});
    const auto y = conv1d(constant(tape, x), constant(tape, w), constant(tape, Tensor::vector({0.25})), 2);
    // stride 2 -> positions 0 and 2
    ASSERT_EQ(y.shape(), (Shape{1, 1, 2}));
    EXPECT_DOUBLE_EQ(y.value()[0], (1 * 1 - 1 * 2) + (2 * -1 + 0.5 * 0) + 0.25);
    EXPECT_DOUBLE_EQ(y.value()[1], (1 * 3 - 1 * 4) + (2 * 1 + 0.5 * 0) + 0.25);
}

TEST(Ops, MaxPoolTiesPickFirstIndex) {
    Parameter p("x", Tensor::vector({2.0, 2.0, 1.0, 3.0, 5.0}));
    Tape tape;
    const auto x = param(tape, p);
    const auto y = maxpool1d(x, 2);
    ASSERT_EQ(y.shape(), (Shape{2}));
    EXPECT_DOUBLE_EQ(y.value()[0], 2.0);
    EXPECT_DOUBLE_EQ(y.value()[1], 3.0);
    const auto g = backward(tape, sum(y).id());
    EXPECT_EQ(g.of(x.id()), Tensor::vector({1.0, 0.0, 0.0, 1.0, 0.0}));
}

TEST(Ops, CrossEntropyOfUniformLogitsIsLogTwo) {
    Tape tape;
    const std::vector<std::size_t> labels{0};
    const auto l = softmax_cross_entropy(constant(tape, Tensor::matrix(1, 2, {0.0, 0.0})), labels);
    // -log(softmax_0) evaluated directly.
    const double oracle = -std::log(std::exp(0.0) / (std::exp(0.0) + std::exp(0.0)));
    EXPECT_NEAR(l.value()[0], oracle, 1e-15);
    EXPECT_NEAR(l.value()[0], std::numbers::ln2, 1e-15);
}

TEST(Ops, CrossEntropyIsStableForLargeLogits) {
    Tape tape;
    const std::vector<std::size_t> labels{1};
    const auto l = softmax_cross_entropy(constant(tape, Tensor::matrix(1, 2, {1000.0, 0.0})), labels);
    EXPECT_NEAR(l.value()[0], 1000.0, 1e-9);
}

TEST(Ops, SoftmaxSumsToOneForExtremeInputs) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Tape tape;
        const auto s = softmax(constant(tape, testing::random_tensor(rng, {3, 7}, -300.0, 300.0)));
        for (std::size_t r = 0; r < 3; ++r) {
            double total = 0.0;
            for (std::size_t j = 0; j < 7; ++j) {
                const double v = s.value()[r * 7 + j];
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
                total += v;
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(Ops, BroadcastingRejectsIncompatibleShapes) {
    Tape tape;
    EXPECT_THROW(add(constant(tape, Tensor({2, 3})), constant(tape, Tensor({2}))), ShapeError);
}

TEST(Ops, ConcatWithoutInputsIsDomainError) {
    EXPECT_THROW(concat(std::span<const Var>{}, 0), DomainError);
}

TEST(Ops, PiecewiseLinearClampsAndInterpolates) {
    Tape tape;
    const std::vector<double> kp{0.0, 1.0};
    const auto y = piecewise_linear(constant(tape, Tensor::vector({-0.5, 0.25, 0.5, 2.0})),
                                    constant(tape, Tensor::vector({0.0, 2.0})), kp);
    EXPECT_EQ(y.value(), Tensor::vector({0.0, 0.5, 1.0, 2.0}));
}

TEST(Ops, PiecewiseLinearRejectsUnsortedKeypoints) {
    Tape tape;
    const std::vector<double> kp{0.0, 0.0};
    EXPECT_THROW(piecewise_linear(constant(tape, Tensor::vector({0.1})), constant(tape, Tensor::vector({0, 1})), kp),
                 DomainError);
}

TEST(Ops, MultilinearDimensionMismatch) {
    Tape tape;
    const std::vector<std::size_t> sizes{2, 2};
    EXPECT_THROW(multilinear(constant(tape, Tensor({1, 3})), constant(tape, Tensor({4})), sizes), ShapeError);
}

TEST(Ops, StopGradientBlocksUpstream) {
    Tape tape;
    Parameter p("p", Tensor::vector({1.5, -2.0}));
    const auto x = param(tape, p);
    // loss = sum(x * stop(x)) -> d/dx = stop(x) only
    const auto loss = sum(mul(x, stop_gradient(x)));
    const auto g = backward(tape, loss.id());
    EXPECT_EQ(g.of(x.id()), p.value);
    // loss = sum(stop(x)^2) contributes nothing
    const auto loss2 = sum(square(stop_gradient(x)));
    const auto g2 = backward(tape, loss2.id());
    EXPECT_FALSE(g2.has(x.id()));
}

TEST(Ops, FiniteValuesForFiniteInputs) {
    Rng rng(3);
    for (const auto& fam : testing::diffcore_primitives()) {
        for (int i = 0; i < 20; ++i) {
            auto c = fam.make(rng);
            Tape tape;
            std::vector<Var> vars;
            for (auto& t : c.inputs) vars.push_back(constant(tape, t));
            EXPECT_TRUE(c.fn(tape, vars).value().all_finite()) << fam.name;
        }
    }
}

}  // namespace
}  // namespace argate::diffcore
