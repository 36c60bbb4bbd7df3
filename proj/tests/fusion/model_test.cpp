#include <gtest/gtest.h>

#include "argate/fusion/model.hpp"
#include "../support/fusion_fixtures.hpp"
#include "../support/fusion_oracles.hpp"
#include "../support/gradcheck.hpp"

namespace argate::fusion {
namespace {

using testing::random_inputs;
using testing::tiny_config;

// Zero the last gate layer so FC-con emits exactly `bias` for every input.
void pin_gate_logits(FusionModel& model, const std::vector<double>& bias) {
    model.parameters().at("gate.fc2.weight").value.fill(0.0);
    auto& b = model.parameters().at("gate.fc2.bias").value;
    for (std::size_t i = 0; i < bias.size(); ++i) b[i] = bias[i];
}

std::vector<double> row(const Tensor& t, std::size_t r) {
    const std::size_t w = t.dim(1);
    return {t.values().begin() + static_cast<std::ptrdiff_t>(r * w),
            t.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * w)};
}

TEST(Variant, RoundTripsNames) {
    for (Variant v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_THROW(parse_variant("argate"), std::invalid_argument);
}

TEST(ModelConfig, RejectsInvalidFields) {
    auto c = tiny_config(Variant::ArgatePlus);
    c.alpha = -1.0;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = tiny_config(Variant::NetGated, 1);
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = tiny_config(Variant::Baseline, 1);
    EXPECT_NO_THROW(validate(c));
}

TEST(FusionWeights, SigmoidThenSoftmaxOfGateLogits) {
    Rng rng(1);
    FusionModel model(tiny_config(Variant::NetGated, 2), rng);
    pin_gate_logits(model, {2.0, -2.0});
    Tape tape;
    const auto out = model.forward(tape, random_inputs(rng, model.config(), 3), false);
    for (std::size_t b = 0; b < 3; ++b) {
        const auto w = row(out.weights->value(), b);
        EXPECT_NEAR(w[0], 0.6816997421945262, 1e-12);
        EXPECT_NEAR(w[1], 0.3183002578054738, 1e-12);
    }
}

TEST(FusionWeights, EqualLogitsGiveUniformWeights) {
    Rng rng(2);
    FusionModel model(tiny_config(Variant::ArgatePlus, 4), rng);
    pin_gate_logits(model, {0.7, 0.7, 0.7, 0.7});
    Tape tape;
    const auto out = model.forward(tape, random_inputs(rng, model.config(), 2), false);
    for (double w : out.weights->value().values()) EXPECT_NEAR(w, 0.25, 1e-15);
}

TEST(FusionWeights, NormalizedOverManyRandomInputs) {
    Rng rng(3);
    FusionModel model(tiny_config(Variant::NetGated, 5), rng);
    for (Parameter* p : model.parameters().with_prefix("gate."))
        for (auto& v : p->value.values()) v = rng.uniform(-3.0, 3.0);
    Tape tape;
    std::vector<Var> features;
    for (std::size_t k = 0; k < 5; ++k) features.push_back(diffcore::constant(tape, testing::random_tensor(rng, {10000, 4}, -5, 5)));
    const Tensor& w = model.fusion_weights(tape, features).value();
    for (std::size_t b = 0; b < 10000; ++b) {
        double total = 0.0;
        for (double v : row(w, b)) {
            ASSERT_GT(v, 0.0);
            ASSERT_LT(v, 1.0);
            total += v;
        }
        ASSERT_NEAR(total, 1.0, 1e-6);
    }
}

TEST(FusionWeights, GateOffMakesLogitsIgnoreModality) {
    Rng rng(4);
    FusionModel model(tiny_config(Variant::ArgatePlus, 3), rng);
    Tape tape;
    const auto inputs = random_inputs(rng, model.config(), 6);
    std::vector<Var> features;
    for (std::size_t k = 0; k < 3; ++k) features.push_back(model.encode(tape, k, diffcore::constant(tape, inputs[k])));
    Tensor w({6, 3});
    for (std::size_t b = 0; b < 6; ++b) {
        w[b * 3 + 0] = 0.3;
        w[b * 3 + 1] = 0.0;
        w[b * 3 + 2] = 0.7;
    }
    const Var weights = diffcore::constant(tape, w);
    const Tensor before = model.classify(tape, features, weights).value();
    for (int trial = 0; trial < 20; ++trial) {
        auto perturbed = features;
        perturbed[1] = diffcore::constant(tape, testing::random_tensor(rng, {6, 4}, -100, 100));
        EXPECT_EQ(model.classify(tape, perturbed, weights).value(), before);
    }
}

TEST(FusionWeights, OneHotWeightsPassThatFeatureToTheHead) {
    Rng rng(5);
    FusionModel gated(tiny_config(Variant::NetGated, 3), rng);
    auto single = tiny_config(Variant::Baseline, 1);
    FusionModel unimodal(single, rng);
    for (const char* name : {"head.fc1.weight", "head.fc1.bias", "head.fc2.weight", "head.fc2.bias"})
        unimodal.parameters().at(name).value = gated.parameters().at(name).value;
    Tape tape;
    std::vector<Var> features;
    for (int k = 0; k < 3; ++k) features.push_back(diffcore::constant(tape, testing::random_tensor(rng, {4, 4})));
    Tensor onehot({4, 3});
    for (std::size_t b = 0; b < 4; ++b) onehot[b * 3 + 2] = 1.0;
    const Tensor gated_logits = gated.classify(tape, features, diffcore::constant(tape, onehot)).value();
    const std::vector<Var> only{features[2]};
    EXPECT_EQ(gated_logits, unimodal.classify(tape, only, std::nullopt).value());
}

TEST(Baseline, MeanFusionIsSymmetricAndIdempotent) {
    Rng rng(6);
    FusionModel model(tiny_config(Variant::Baseline, 3), rng);
    Tape tape;
    const Var f = diffcore::constant(tape, testing::random_tensor(rng, {5, 4}));
    const std::vector<Var> same{f, f, f};
    auto single_cfg = tiny_config(Variant::Baseline, 1);
    FusionModel single(single_cfg, rng);
    for (const char* name : {"head.fc1.weight", "head.fc1.bias", "head.fc2.weight", "head.fc2.bias"})
        single.parameters().at(name).value = model.parameters().at(name).value;
    const std::vector<Var> one{f};
    const Tensor a = model.classify(tape, same, std::nullopt).value();
    const Tensor b = single.classify(tape, one, std::nullopt).value();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);

    const std::vector<Var> feats{diffcore::constant(tape, testing::random_tensor(rng, {5, 4})),
                                 diffcore::constant(tape, testing::random_tensor(rng, {5, 4})), f};
    const std::vector<Var> permuted{feats[2], feats[0], feats[1]};
    const Tensor p = model.classify(tape, feats, std::nullopt).value();
    const Tensor q = model.classify(tape, permuted, std::nullopt).value();
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(Forward, RejectsMissingModality) {
    Rng rng(7);
    FusionModel model(tiny_config(Variant::Baseline, 3), rng);
    auto inputs = random_inputs(rng, model.config(), 2);
    inputs.pop_back();
    Tape tape;
    EXPECT_THROW(model.forward(tape, inputs, false), MissingModality);
    inputs.push_back(Tensor({2, 15}));
    EXPECT_THROW(model.forward(tape, inputs, false), diffcore::ShapeError);
}

TEST(Forward, AuxPathsShareEncodersAndStayIndependent) {
    Rng rng(8);
    FusionModel model(tiny_config(Variant::ArgateWs, 3), rng);
    auto inputs = random_inputs(rng, model.config(), 4);
    Tape tape, tape2, tape3;
    const auto base = model.forward(tape, inputs, true);
    ASSERT_EQ(base.aux_logits.size(), 3u);
    const Tensor main0 = base.logits.value(), aux0 = base.aux_logits[0].value(), aux1 = base.aux_logits[1].value();

    model.parameters().at("enc.0.fc.bias").value[0] += 0.5;
    const auto shifted = model.forward(tape2, inputs, true);
    EXPECT_NE(shifted.logits.value(), main0);
    EXPECT_NE(shifted.aux_logits[0].value(), aux0);
    EXPECT_EQ(shifted.aux_logits[1].value(), aux1);
    model.parameters().at("enc.0.fc.bias").value[0] -= 0.5;

    // Changing modality 2's input leaves aux paths 0 and 1 alone.
    inputs[2] = testing::random_tensor(rng, {4, 16});
    const auto other = model.forward(tape3, inputs, true);
    EXPECT_EQ(other.aux_logits[0].value(), aux0);
    EXPECT_EQ(other.aux_logits[1].value(), aux1);
}

TEST(Forward, InferenceSkipsTrainingOnlyPaths) {
    Rng rng(9);
    FusionModel model(tiny_config(Variant::ArgateL, 3), rng);
    Tape tape;
    const auto out = model.forward(tape, random_inputs(rng, model.config(), 2), false);
    EXPECT_TRUE(out.aux_logits.empty());
    ASSERT_NE(model.target_network(), nullptr);
    for (Parameter* p : model.inference_parameters()) {
        EXPECT_FALSE(p->name.starts_with("aux.") || p->name.starts_with("dln.")) << p->name;
    }
}

TEST(Forward, DenseEncoderForShortSeries) {
    auto c = tiny_config(Variant::ArgatePlus, 3);
    c.input_length = 1;
    EXPECT_FALSE(uses_conv_encoder(c.encoder, 1));
    Rng rng(10);
    FusionModel model(c, rng);
    EXPECT_NE(model.parameters().find("enc.0.fc0.weight"), nullptr);
    Tape tape;
    EXPECT_EQ(model.forward(tape, random_inputs(rng, c, 3), false).logits.shape(), (diffcore::Shape{3, 3}));
}

TEST(Forward, NetGatedGradientsMatchFiniteDifferences) {
    Rng rng(11);
    FusionModel model(tiny_config(Variant::NetGated, 2), rng);
    const auto inputs = random_inputs(rng, model.config(), 3);
    const std::vector<std::size_t> labels{0, 2, 1};
    const auto loss = [&](Tape& tape) {
        return diffcore::mean(diffcore::softmax_cross_entropy(model.forward(tape, inputs, true).logits, labels));
    };
    EXPECT_LT(testing::check_parameter_gradients(model.parameters(), loss).max_rel_error, 1e-4);
}

TEST(Checkpoint, LoadsInferenceWeightsWithoutTrainingGroups) {
    Rng rng(12);
    FusionModel trained(tiny_config(Variant::ArgateL, 3), rng);
    FusionModel fresh(tiny_config(Variant::ArgateL, 3), rng);
    std::map<std::string, Tensor> tensors;
    for (Parameter* p : trained.inference_parameters()) tensors[p->name] = p->value;
    fresh.load_inference_weights(tensors);
    const auto inputs = random_inputs(rng, trained.config(), 4);
    Tape tape;
    EXPECT_EQ(fresh.forward(tape, inputs, false).logits.value(), trained.forward(tape, inputs, false).logits.value());

    tensors.erase("head.fc2.bias");
    EXPECT_THROW(fresh.load_inference_weights(tensors), std::invalid_argument);
    tensors["head.fc2.bias"] = trained.parameters().at("head.fc2.bias").value;
    tensors["bogus"] = Tensor::scalar(1.0);
    EXPECT_THROW(fresh.load_inference_weights(tensors), std::invalid_argument);
}

TEST(ParameterParity, VariantsWithinFivePercent) {
    struct Shape3 {
        std::size_t k, length, classes;
    };
    for (const auto& s : {Shape3{9, 128, 6}, Shape3{15, 1, 10}, Shape3{4, 32, 3}}) {
        ModelConfig c;
        for (std::size_t i = 0; i < s.k; ++i) c.channels.push_back("c" + std::to_string(i));
        c.input_length = s.length;
        c.classes = s.classes;
        c.variant = Variant::ArgateL;
        const double reference = static_cast<double>(count_parameters(c));
        for (Variant v : all_variants()) {
            c.variant = v;
            const double n = static_cast<double>(count_parameters(c));
            EXPECT_LE(std::abs(n - reference) / reference, 0.05)
                << to_string(v) << " K=" << s.k << ": " << n << " vs " << reference;
        }
    }
}

}  // namespace
}  // namespace argate::fusion
