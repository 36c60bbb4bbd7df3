#include <gtest/gtest.h>

#include "argate/lattice/network.hpp"
#include "../support/gradcheck.hpp"
#include "../support/lattice_training.hpp"

namespace argate::lattice {
namespace {

// Output j against input j over 1000 random pairs per coordinate, evaluated
// as one batch: rows 2p and 2p+1 differ only in coordinate j.
std::size_t count_violations(const LatticeNetwork& net, Rng& rng, bool normalized) {
    const std::size_t k = net.size(), pairs = 1000;
    std::size_t total = 0;
    for (std::size_t j = 0; j < k; ++j) {
        Tensor u({2 * pairs, k});
        for (std::size_t p = 0; p < pairs; ++p) {
            for (std::size_t i = 0; i < k; ++i) u[2 * p * k + i] = u[(2 * p + 1) * k + i] = rng.uniform01();
            double lo = rng.uniform01(), hi = rng.uniform01();
            if (lo > hi) std::swap(lo, hi);
            u[2 * p * k + j] = lo;
            u[(2 * p + 1) * k + j] = hi;
        }
        Tape tape;
        Var out = net.apply(tape, diffcore::constant(tape, u));
        if (normalized) out = diffcore::softmax(out);
        for (std::size_t p = 0; p < pairs; ++p) {
            if (out.value()[2 * p * k + j] > out.value()[(2 * p + 1) * k + j] + 1e-12) ++total;
        }
    }
    return total;
}

std::size_t raw_violations(const LatticeNetwork& net, Rng& rng) { return count_violations(net, rng, false); }
std::size_t normalized_violations(const LatticeNetwork& net, Rng& rng) { return count_violations(net, rng, true); }

TEST(LatticeNetwork, BatchedAndScalarEvaluationAgree) {
    ParameterSet params;
    Rng rng(2);
    LatticeNetwork net(params, "dln", 4, {}, rng);
    testing::train_lattice_network(net, params, 20, rng);
    Tensor u({3, 4});
    for (auto& v : u.values()) v = rng.uniform01();
    Tape tape;
    const Var out = net.apply(tape, diffcore::constant(tape, u));
    for (std::size_t b = 0; b < 3; ++b) {
        const auto row = net.eval(std::span<const double>(u.values()).subspan(b * 4, 4));
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(row[j], out.value()[b * 4 + j], 1e-12);
    }
}

TEST(LatticeNetwork, ParsesCrossInputMode) {
    EXPECT_EQ(parse_cross_inputs("free"), CrossInputs::Free);
    EXPECT_EQ(to_string(parse_cross_inputs("decreasing")), "decreasing");
    EXPECT_THROW(parse_cross_inputs("up"), std::invalid_argument);
}

TEST(LatticeNetwork, SymmetricAtInitWithoutJitter) {
    ParameterSet params;
    Rng rng(1);
    LatticeNetwork net(params, "dln", 2, {.init_jitter = 0.0}, rng);
    const auto out = net.eval(std::vector<double>{0.5, 0.5});
    EXPECT_NEAR(out[0], out[1], 1e-12);
    EXPECT_THROW(net.eval(std::vector<double>{0.5}), diffcore::ShapeError);
}

TEST(LatticeNetwork, MonotoneBeforeAndAfterTraining) {
    for (std::size_t k : {2u, 3u, 9u}) {
        ParameterSet params;
        Rng rng(10 + k);
        LatticeNetwork net(params, "dln", k, {}, rng);
        EXPECT_TRUE(net.is_feasible());
        EXPECT_EQ(raw_violations(net, rng), 0u);
        EXPECT_EQ(normalized_violations(net, rng), 0u);
        testing::train_lattice_network(net, params, 100, rng);
        EXPECT_TRUE(net.is_feasible());
        EXPECT_EQ(raw_violations(net, rng), 0u) << "K=" << k;
        EXPECT_EQ(normalized_violations(net, rng), 0u) << "K=" << k;
    }
}

TEST(LatticeNetwork, FreeCrossInputsKeepsOwnCoordinateMonotone) {
    ParameterSet params;
    Rng rng(20);
    LatticeNetwork net(params, "dln", 3, {.cross_inputs = CrossInputs::Free}, rng);
    testing::train_lattice_network(net, params, 100, rng);
    EXPECT_EQ(raw_violations(net, rng), 0u);
}

TEST(LatticeNetwork, GradientsMatchFiniteDifferences) {
    Rng rng(30);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        ParameterSet params;
        const std::size_t k = 2 + rng.below(2);
        LatticeNetwork net(params, "dln", k, {.input_keypoints = 4, .hidden_keypoints = 4}, rng);
        for (Parameter* p : params.all())
            for (auto& v : p->value.values()) v += rng.uniform(-0.2, 0.2);
        // Inputs off the keypoints at 0, 1/3, 2/3, 1.
        Tensor u({2, k});
        for (auto& v : u.values()) v = rng.uniform(0.05, 0.3) + static_cast<double>(rng.below(3)) / 3.0;
        Tensor proj({2, k});
        for (auto& v : proj.values()) v = rng.uniform(-1.0, 1.0);
        const auto loss = [&](Tape& tape) {
            return diffcore::sum(net.apply(tape, diffcore::constant(tape, u)) * diffcore::constant(tape, proj));
        };
        worst = std::max(worst, testing::check_parameter_gradients(params, loss).max_rel_error);
    }
    EXPECT_LT(worst, 1e-4);
}

}  // namespace
}  // namespace argate::lattice
