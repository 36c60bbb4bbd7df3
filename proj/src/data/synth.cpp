#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "argate/data/sources.hpp"
#include "argate/random.hpp"

namespace argate::data {

Dataset synth_dataset(const SynthSpec& spec) {
    if (spec.channels == 0 || spec.classes == 0 || spec.length == 0) {
        throw std::invalid_argument("synth_dataset: channels, classes and length must be positive");
    }
    Dataset d;
    for (std::size_t k = 0; k < spec.channels; ++k) d.channels.push_back("s" + std::to_string(k));
    for (std::size_t c = 0; c < spec.classes; ++c) d.classes.push_back("class" + std::to_string(c));
    d.length = spec.length;

    Rng order_rng(derive_seed(spec.seed, 0, 0));
    std::vector<std::size_t> labels(spec.examples);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % spec.classes;
    order_rng.shuffle(std::span<std::size_t>(labels));

    d.values.reserve(spec.examples * d.example_stride());
    std::vector<double> example(d.example_stride());
    for (std::size_t i = 0; i < spec.examples; ++i) {
        Rng rng(derive_seed(spec.seed, 1, i));
        const double freq = static_cast<double>(labels[i] + 1);
        for (std::size_t k = 0; k < spec.channels; ++k) {
            const double amplitude = k < spec.informative.size() ? spec.informative[k] : 0.0;
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t t = 0; t < spec.length; ++t) {
                double v;
                if (amplitude == 0.0) {
                    v = rng.uniform(-1.0, 1.0);
                } else {
                    const double angle =
                        2.0 * std::numbers::pi * freq * static_cast<double>(t) / static_cast<double>(spec.length);
                    v = std::clamp(amplitude * std::sin(angle + phase) + spec.noise * rng.normal(), -1.0, 1.0);
                }
                example[k * spec.length + t] = v;
            }
        }
        d.push_back(example, labels[i]);
    }
    return d;
}

}  // namespace argate::data
