#include "argate/lattice/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "argate/lattice/isotonic.hpp"

namespace argate::lattice {

using namespace diffcore;

double inverse_softplus(double y) {
    if (!(y > 0.0)) throw std::domain_error("inverse_softplus: argument must be positive");
    return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

namespace {

double softplus_value(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::vector<double> uniform_keypoints(std::size_t count) {
    if (count < 2) throw std::invalid_argument("calibrator: need at least 2 keypoints");
    std::vector<double> kp(count);
    for (std::size_t i = 0; i < count; ++i) kp[i] = static_cast<double>(i) / static_cast<double>(count - 1);
    return kp;
}

std::vector<double> scalar_outputs(const Var& v) {
    return {v.value().values().begin(), v.value().values().end()};
}

}  // namespace

// ---------------------------------------------------------------------------

Calibrator::Calibrator(ParameterSet& params, const std::string& name, std::vector<double> keypoints,
                       Monotonicity monotonicity, std::span<const double> initial_outputs)
    : keypoints_(std::move(keypoints)), monotonicity_(monotonicity) {
    const std::size_t m = keypoints_.size();
    if (m < 2) throw std::invalid_argument("calibrator '" + name + "': need at least 2 keypoints");
    for (std::size_t i = 1; i < m; ++i) {
        if (!(keypoints_[i] > keypoints_[i - 1])) {
            throw std::invalid_argument("calibrator '" + name + "': keypoints must be strictly increasing");
        }
    }
    if (initial_outputs.size() != m) {
        throw std::invalid_argument("calibrator '" + name + "': " + std::to_string(initial_outputs.size()) +
                                    " outputs for " + std::to_string(m) + " keypoints");
    }
    Tensor raw({m});
    raw[0] = initial_outputs[0];
    for (std::size_t i = 1; i < m; ++i) {
        const double step = initial_outputs[i] - initial_outputs[i - 1];
        switch (monotonicity_) {
            case Monotonicity::None: raw[i] = initial_outputs[i]; break;
            case Monotonicity::Increasing: raw[i] = inverse_softplus(step); break;
            case Monotonicity::Decreasing: raw[i] = inverse_softplus(-step); break;
        }
    }
    raw_ = &params.add(name + ".outputs", std::move(raw));
}

Calibrator Calibrator::identity(ParameterSet& params, const std::string& name, std::size_t count,
                                Monotonicity monotonicity) {
    auto kp = uniform_keypoints(count);
    std::vector<double> out = kp;
    if (monotonicity == Monotonicity::Decreasing) {
        for (auto& v : out) v = 1.0 - v;
    }
    return Calibrator(params, name, std::move(kp), monotonicity, out);
}

Var Calibrator::outputs(Tape& tape) const {
    const Var raw = param(tape, *raw_);
    if (monotonicity_ == Monotonicity::None) return raw;
    const std::size_t m = keypoints_.size();
    Var steps = softplus(slice(raw, 0, 1, m));
    if (monotonicity_ == Monotonicity::Decreasing) steps = neg(steps);
    return cumsum(concat({slice(raw, 0, 0, 1), steps}, 0));
}

std::vector<double> Calibrator::output_keypoints() const {
    Tape tape;
    return scalar_outputs(outputs(tape));
}

double Calibrator::eval(double x) const {
    Tape tape;
    return apply(tape, constant(tape, Tensor::scalar(x))).value().item();
}

Var Calibrator::apply(Tape& tape, Var x) const { return piecewise_linear(x, outputs(tape), keypoints_); }

// ---------------------------------------------------------------------------

LinearEmbedding::LinearEmbedding(ParameterSet& params, const std::string& name, std::size_t inputs,
                                 std::size_t outputs, std::vector<bool> monotone_inputs)
    : inputs_(inputs), outputs_(outputs), monotone_(std::move(monotone_inputs)) {
    if (inputs == 0 || outputs == 0) throw std::invalid_argument("linear embedding '" + name + "': empty shape");
    if (monotone_.size() != inputs) {
        throw std::invalid_argument("linear embedding '" + name + "': mask length " + std::to_string(monotone_.size()) +
                                    " != inputs " + std::to_string(inputs));
    }
    raw_ = &params.add(name + ".weight", Tensor({inputs, outputs}));
    bias_ = &params.add(name + ".bias", Tensor({outputs}));
    std::vector<double> averaging(outputs * inputs, 1.0 / static_cast<double>(inputs));
    set(averaging, std::vector<double>(outputs, 0.0));
}

void LinearEmbedding::set(std::span<const double> coefficients, std::span<const double> bias) {
    if (coefficients.size() != inputs_ * outputs_ || bias.size() != outputs_) {
        throw ShapeError("linear embedding: set() size mismatch");
    }
    for (std::size_t o = 0; o < outputs_; ++o) {
        for (std::size_t i = 0; i < inputs_; ++i) {
            const double c = coefficients[o * inputs_ + i];
            raw_->value[i * outputs_ + o] = monotone_[i] ? inverse_softplus(c) : c;
        }
        bias_->value[o] = bias[o];
    }
    raw_->touch();
    bias_->touch();
}

std::vector<double> LinearEmbedding::coefficients() const {
    std::vector<double> out(inputs_ * outputs_);
    for (std::size_t o = 0; o < outputs_; ++o) {
        for (std::size_t i = 0; i < inputs_; ++i) {
            const double r = raw_->value[i * outputs_ + o];
            out[o * inputs_ + i] = monotone_[i] ? softplus_value(r) : r;
        }
    }
    return out;
}

std::vector<double> LinearEmbedding::eval(std::span<const double> x) const {
    if (x.size() != inputs_) {
        throw ShapeError("linear embedding: input length " + std::to_string(x.size()) + " != " + std::to_string(inputs_));
    }
    Tape tape;
    const auto y = apply(tape, constant(tape, Tensor({1, inputs_}, {x.begin(), x.end()})));
    return scalar_outputs(y);
}

Var LinearEmbedding::apply(Tape& tape, Var x) const {
    if (x.value().rank() != 2 || x.value().dim(1) != inputs_) {
        throw ShapeError("linear embedding: expected [B, " + std::to_string(inputs_) + "] input, got " +
                         to_string(x.shape()));
    }
    const Var raw = param(tape, *raw_);
    Var weight = raw;
    bool any = false;
    for (bool m : monotone_) any = any || m;
    if (any) {
        Tensor mask({inputs_, 1}), keep({inputs_, 1});
        for (std::size_t i = 0; i < inputs_; ++i) {
            mask[i] = monotone_[i] ? 1.0 : 0.0;
            keep[i] = 1.0 - mask[i];
        }
        weight = add(mul(raw, constant(tape, keep)), mul(softplus(raw), constant(tape, mask)));
    }
    return add(matmul(x, weight), param(tape, *bias_));
}

// ---------------------------------------------------------------------------

Lattice::Lattice(ParameterSet& params, const std::string& name, std::vector<std::size_t> sizes,
                 std::vector<bool> monotone_dims)
    : sizes_(std::move(sizes)), monotone_(std::move(monotone_dims)) {
    if (sizes_.empty()) throw std::invalid_argument("lattice '" + name + "': zero dimensions");
    if (monotone_.size() != sizes_.size()) throw std::invalid_argument("lattice '" + name + "': mask length mismatch");
    std::size_t total = 1;
    for (std::size_t s : sizes_) {
        if (s < 2) throw std::invalid_argument("lattice '" + name + "': each dimension needs >= 2 vertices");
        total *= s;
    }
    vertices_ = &params.add(name + ".vertices", Tensor({total}));
    init_linear_ramp();
}

void Lattice::init_linear_ramp() {
    const std::size_t d = sizes_.size();
    Tensor& v = vertices_->value;
    for (std::size_t flat = 0; flat < v.size(); ++flat) {
        std::size_t rem = flat;
        double acc = 0.0;
        for (std::size_t j = d; j-- > 0;) {
            const std::size_t idx = rem % sizes_[j];
            rem /= sizes_[j];
            acc += static_cast<double>(idx) / static_cast<double>(sizes_[j] - 1);
        }
        v[flat] = acc / static_cast<double>(d);
    }
    vertices_->touch();
}

double Lattice::eval(std::span<const double> x) const {
    if (x.size() != sizes_.size()) {
        throw ShapeError("lattice: input length " + std::to_string(x.size()) + " != dimension " +
                         std::to_string(sizes_.size()));
    }
    Tape tape;
    return apply(tape, constant(tape, Tensor({1, x.size()}, {x.begin(), x.end()}))).value().item();
}

Var Lattice::apply(Tape& tape, Var x) const { return multilinear(x, param(tape, *vertices_), sizes_); }

namespace {

// Calls f(offset, stride) for every 1-d fiber along `axis`.
template <typename F>
void for_each_fiber(const std::vector<std::size_t>& sizes, std::size_t axis, F&& f) {
    std::size_t inner = 1, outer = 1;
    for (std::size_t j = axis + 1; j < sizes.size(); ++j) inner *= sizes[j];
    for (std::size_t j = 0; j < axis; ++j) outer *= sizes[j];
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) f(o * sizes[axis] * inner + i, inner);
    }
}

}  // namespace

bool Lattice::is_feasible() const {
    const Tensor& v = vertices_->value;
    for (std::size_t axis = 0; axis < sizes_.size(); ++axis) {
        if (!monotone_[axis]) continue;
        bool ok = true;
        for_each_fiber(sizes_, axis, [&](std::size_t offset, std::size_t stride) {
            for (std::size_t k = 1; k < sizes_[axis]; ++k) {
                if (v[offset + k * stride] < v[offset + (k - 1) * stride]) ok = false;
            }
        });
        if (!ok) return false;
    }
    return true;
}

void project_monotone(Lattice& lattice) {
    constexpr int kMaxSweeps = 10;
    Tensor& v = lattice.vertices().value;
    const auto& sizes = lattice.sizes();
    bool changed_any = false;
    for (int sweep = 0; sweep < kMaxSweeps && !lattice.is_feasible(); ++sweep) {
        for (std::size_t axis = 0; axis < sizes.size(); ++axis) {
            if (!lattice.monotone_dims()[axis]) continue;
            std::vector<double> fiber(sizes[axis]);
            for_each_fiber(sizes, axis, [&](std::size_t offset, std::size_t stride) {
                for (std::size_t k = 0; k < fiber.size(); ++k) fiber[k] = v[offset + k * stride];
                if (is_non_decreasing(fiber)) return;
                isotonic_projection(fiber);
                for (std::size_t k = 0; k < fiber.size(); ++k) v[offset + k * stride] = fiber[k];
                changed_any = true;
            });
        }
    }
    if (changed_any) lattice.vertices().touch();
}

}  // namespace argate::lattice
