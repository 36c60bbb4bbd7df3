#include "argate/harness/train.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

#include "argate/diffcore/checkpoint.hpp"
#include "argate/fusion/loss.hpp"

namespace argate::harness {

namespace {

using diffcore::Tape;
using diffcore::Tensor;

// Stream tags under the run seed.
constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kCorruptionStream = 3;

template <class Fn>
void for_each_batch(const data::Dataset& data, std::size_t batch_size, Fn fn) {
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        idx.resize(std::min(batch_size, data.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        fn(idx);
    }
}

std::filesystem::path sidecar_of(const std::filesystem::path& checkpoint) {
    return checkpoint.string() + ".yaml";
}

}  // namespace

data::SplitDataset load_dataset(const DatasetSpec& spec) {
    switch (spec.kind) {
        case DatasetKind::Har: return data::load_har(spec.path);
        case DatasetKind::Driver: return data::load_driver(spec.path, spec.driver);
        case DatasetKind::Cache: return data::load_dataset_cache(spec.path);
        case DatasetKind::Synth: {
            data::SplitDataset split;
            split.train = data::synth_dataset(spec.synth);
            auto test_spec = spec.synth;
            test_spec.examples = spec.synth_test_examples;
            test_spec.seed = derive_seed(spec.synth.seed, 0x7e57);
            split.test = data::synth_dataset(test_spec);
            split.manifest.name = "synth";
            split.manifest.notes = {{"seed", std::to_string(spec.synth.seed)}};
            data::normalize_splits(split);
            return split;
        }
    }
    throw ConfigError("unknown dataset kind");
}

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t run_seed) {
    PreparedData out{load_dataset(config.dataset), std::nullopt};
    if (config.corruption) {
        auto spec = *config.corruption;
        if (!config.corruption_seed_fixed) spec.seed = derive_seed(run_seed, kCorruptionStream);
        out.corruption = corruption::corrupt_splits(out.split, spec);
    }
    return out;
}

fusion::ModelConfig resolve_model_config(fusion::ModelConfig model, const data::Dataset& data) {
    model.channels = data.channels;
    model.input_length = data.length;
    model.classes = data.classes.size();
    if (model.head.hidden == 0) model.head.hidden = fusion::balanced_head_width(model);
    return model;
}

void check_compatible(const fusion::ModelConfig& model, const data::Dataset& data) {
    if (data.channels != model.channels) {
        throw ChannelMismatch("dataset channels do not match the model's " + std::to_string(model.channels.size()) +
                              " channels");
    }
    if (data.length != model.input_length) {
        throw ChannelMismatch("dataset series length " + std::to_string(data.length) + " differs from model's " +
                              std::to_string(model.input_length));
    }
    if (data.classes.size() != model.classes) {
        throw ChannelMismatch("dataset has " + std::to_string(data.classes.size()) + " classes, model " +
                              std::to_string(model.classes));
    }
}

double evaluate_accuracy(const fusion::FusionModel& model, const data::Dataset& data, std::size_t batch_size) {
    check_compatible(model.config(), data);
    if (data.size() == 0) return 0.0;
    std::size_t correct = 0;
    for_each_batch(data, batch_size, [&](const std::vector<std::size_t>& idx) {
        Tape tape;
        const auto inputs = data.batch(idx);
        const Tensor logits = model.forward(tape, inputs, false).logits.value();
        const std::size_t classes = logits.dim(1);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const double* row = logits.data() + b * classes;
            const auto best = static_cast<std::size_t>(std::max_element(row, row + classes) - row);
            correct += best == data.labels[idx[b]];
        }
    });
    return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate_loss(const fusion::FusionModel& model, const data::Dataset& data, std::size_t batch_size) {
    check_compatible(model.config(), data);
    if (data.size() == 0) return 0.0;
    double total = 0.0;
    for_each_batch(data, batch_size, [&](const std::vector<std::size_t>& idx) {
        Tape tape;
        const auto inputs = data.batch(idx);
        std::vector<std::size_t> labels;
        for (auto i : idx) labels.push_back(data.labels[i]);
        const auto losses = diffcore::softmax_cross_entropy(model.forward(tape, inputs, false).logits, labels);
        for (double v : losses.value().values()) total += v;
    });
    return total / static_cast<double>(data.size());
}

std::vector<std::vector<double>> extract_fusion_weights(const fusion::FusionModel& model, const data::Dataset& data,
                                                        std::size_t batch_size) {
    check_compatible(model.config(), data);
    if (!fusion::is_gating(model.config().variant)) {
        throw std::invalid_argument("variant '" + fusion::to_string(model.config().variant) +
                                    "' has no fusion weights");
    }
    std::vector<std::vector<double>> out;
    out.reserve(data.size());
    for_each_batch(data, batch_size, [&](const std::vector<std::size_t>& idx) {
        Tape tape;
        const auto inputs = data.batch(idx);
        const Tensor w = model.forward(tape, inputs, false).weights->value();
        const std::size_t k = w.dim(1);
        for (std::size_t b = 0; b < idx.size(); ++b) out.emplace_back(w.data() + b * k, w.data() + (b + 1) * k);
    });
    return out;
}

void save_trained_model(const std::filesystem::path& checkpoint, fusion::FusionModel& model) {
    if (checkpoint.has_parent_path()) std::filesystem::create_directories(checkpoint.parent_path());
    diffcore::save_checkpoint(checkpoint, model.parameters(), [](const diffcore::Parameter& p) {
        return fusion::FusionModel::is_inference_parameter(p.name);
    });
    std::ofstream sidecar(sidecar_of(checkpoint));
    if (!sidecar) throw std::runtime_error("cannot write '" + sidecar_of(checkpoint).string() + "'");
    sidecar << model_to_yaml(model.config());
}

std::unique_ptr<fusion::FusionModel> load_trained_model(const std::filesystem::path& checkpoint) {
    const auto sidecar = sidecar_of(checkpoint);
    YAML::Node node;
    try {
        node = YAML::LoadFile(sidecar.string());
    } catch (const YAML::Exception&) {
        throw std::runtime_error("cannot read model description '" + sidecar.string() + "'");
    }
    const auto config = parse_model_config(node);
    Rng rng(0);
    auto model = std::make_unique<fusion::FusionModel>(config, rng);
    model->load_inference_weights(diffcore::load_checkpoint(checkpoint));
    return model;
}

TrainedModel train_model(const ExperimentConfig& config, std::uint64_t seed, const PreparedData& data,
                         const TrainOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    const auto& train = data.split.train;
    const auto& test = data.split.test;
    if (train.size() == 0 && config.epochs > 0) throw std::invalid_argument("training split is empty");

    Rng model_rng(derive_seed(seed, kModelStream));
    auto model = std::make_unique<fusion::FusionModel>(resolve_model_config(config.model, train), model_rng);
    Rng batch_rng(derive_seed(seed, kBatchStream));
    auto params = model->parameters().all();

    if (!options.run_dir.empty()) {
        std::filesystem::create_directories(options.run_dir);
        if (data.corruption) corruption::write_corruption_manifest(options.run_dir / "corruption.csv", *data.corruption);
    }

    TrainedModel out;
    out.result.seed = seed;
    // Values before the latest update, restored if that update breaks the loss.
    std::vector<Tensor> last_good;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        batch_rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::span<const std::size_t> idx(order.data() + start,
                                                   std::min(config.batch_size, order.size() - start));
            std::vector<std::size_t> labels;
            labels.reserve(idx.size());
            for (auto i : idx) labels.push_back(train.labels[i]);
            const auto inputs = train.batch(idx);

            model->parameters().zero_grad();
            Tape tape;
            const auto batch = fusion::training_loss(tape, *model, inputs, labels);
            try {
                fusion::check_finite(batch.terms);
            } catch (const fusion::NonFiniteLoss& e) {
                std::filesystem::path saved;
                if (!options.run_dir.empty()) {
                    for (std::size_t i = 0; i < last_good.size(); ++i) params[i]->value = last_good[i];
                    saved = options.run_dir / "last_good.ckpt";
                    save_trained_model(saved, *model);
                }
                throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                          std::to_string(steps + 1) + ": " + e.what(),
                                      saved);
            }
            diffcore::backward_into_parameters(tape, batch.terms.total.id());
            if (!options.run_dir.empty()) {
                last_good.resize(params.size());
                for (std::size_t i = 0; i < params.size(); ++i) last_good[i] = params[i]->value;
            }
            diffcore::optimizer_step(params, config.optimizer);
            model->project();
            loss_sum += batch.terms.total.value().item();
            ++steps;
        }
        if (options.track_curves) {
            out.result.curve.push_back({epoch, loss_sum / static_cast<double>(std::max<std::size_t>(steps, 1)),
                                        evaluate_loss(*model, test), evaluate_accuracy(*model, test)});
        }
    }
    out.result.test_accuracy = evaluate_accuracy(*model, test);
    if (!options.run_dir.empty()) {
        out.result.checkpoint = options.run_dir / "model.ckpt";
        save_trained_model(out.result.checkpoint, *model);
    }
    out.result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.model = std::move(model);
    return out;
}

}  // namespace argate::harness
