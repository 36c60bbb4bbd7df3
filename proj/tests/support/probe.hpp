#pragma once

// Unimodal probe classifier: DFT magnitudes of one channel fed to a softmax
// regression trained by full-batch gradient descent. Phase-invariant, so it
// picks up the sinusoidal class signatures and nothing else.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "argate/data/dataset.hpp"

namespace argate::testing {

inline std::vector<double> spectrum(std::span<const double> series) {
    const std::size_t n = series.size();
    std::vector<double> out(n / 2);
    for (std::size_t f = 1; f <= out.size(); ++f) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(f * t) / static_cast<double>(n);
            re += series[t] * std::cos(angle);
            im -= series[t] * std::sin(angle);
        }
        out[f - 1] = std::sqrt(re * re + im * im) / static_cast<double>(n);
    }
    return out;
}

class SpectralProbe {
public:
    SpectralProbe(std::size_t channel, std::size_t classes) : channel_(channel), classes_(classes) {}

    void fit(const data::Dataset& train, int iterations = 300, double lr = 0.5) {
        const auto x = features(train);
        const std::size_t n = train.size(), d = x.empty() ? 0 : x[0].size();
        mean_.assign(d, 0.0);
        scale_.assign(d, 0.0);
        for (const auto& row : x)
            for (std::size_t j = 0; j < d; ++j) mean_[j] += row[j] / static_cast<double>(n);
        for (const auto& row : x)
            for (std::size_t j = 0; j < d; ++j) scale_[j] += std::pow(row[j] - mean_[j], 2) / static_cast<double>(n);
        for (auto& s : scale_) s = s > 0.0 ? 1.0 / std::sqrt(s) : 0.0;

        weights_.assign(classes_ * (d + 1), 0.0);
        std::vector<double> grad(weights_.size()), probs(classes_);
        for (int it = 0; it < iterations; ++it) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto z = standardize(x[i]);
                scores(z, probs);
                for (std::size_t c = 0; c < classes_; ++c) {
                    const double err = (probs[c] - (train.labels[i] == c ? 1.0 : 0.0)) / static_cast<double>(n);
                    for (std::size_t j = 0; j < d; ++j) grad[c * (d + 1) + j] += err * z[j];
                    grad[c * (d + 1) + d] += err;
                }
            }
            for (std::size_t w = 0; w < weights_.size(); ++w) weights_[w] -= lr * grad[w];
        }
    }

    double accuracy(const data::Dataset& test) const {
        if (test.size() == 0) return 0.0;
        const auto x = features(test);
        std::vector<double> probs(classes_);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < test.size(); ++i) {
            scores(standardize(x[i]), probs);
            const auto best = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
            correct += best == test.labels[i];
        }
        return static_cast<double>(correct) / static_cast<double>(test.size());
    }

private:
    std::vector<std::vector<double>> features(const data::Dataset& d) const {
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < d.size(); ++i) out.push_back(spectrum(d.channel(i, channel_)));
        return out;
    }

    std::vector<double> standardize(const std::vector<double>& row) const {
        std::vector<double> z(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) z[j] = (row[j] - mean_[j]) * scale_[j];
        return z;
    }

    void scores(const std::vector<double>& z, std::vector<double>& probs) const {
        const std::size_t d = z.size();
        double peak = -1e300;
        for (std::size_t c = 0; c < classes_; ++c) {
            double s = weights_[c * (d + 1) + d];
            for (std::size_t j = 0; j < d; ++j) s += weights_[c * (d + 1) + j] * z[j];
            probs[c] = s;
            peak = std::max(peak, s);
        }
        double total = 0.0;
        for (auto& p : probs) total += (p = std::exp(p - peak));
        for (auto& p : probs) p /= total;
    }

    std::size_t channel_, classes_;
    std::vector<double> mean_, scale_, weights_;
};

}  // namespace argate::testing
