#include "argate/lattice/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace argate::lattice {

using namespace diffcore;

CrossInputs parse_cross_inputs(const std::string& name) {
    if (name == "decreasing") return CrossInputs::Decreasing;
    if (name == "free") return CrossInputs::Free;
    throw std::invalid_argument("unknown cross_inputs mode '" + name + "' (expected decreasing or free)");
}

std::string to_string(CrossInputs mode) { return mode == CrossInputs::Decreasing ? "decreasing" : "free"; }

LatticeNetwork::LatticeNetwork(ParameterSet& params, const std::string& name, std::size_t k,
                               const LatticeNetworkConfig& config, Rng& rng)
    : config_(config) {
    if (k == 0) throw std::invalid_argument("lattice network: K must be positive");
    const std::size_t dims = config.embedding_dims ? config.embedding_dims : std::min<std::size_t>(k, 3);
    config_.embedding_dims = dims;
    const bool cross_decreasing = config.cross_inputs == CrossInputs::Decreasing;

    subnets_.reserve(k);
    for (std::size_t out = 0; out < k; ++out) {
        const std::string prefix = name + "." + std::to_string(out);
        Subnetwork net;
        std::vector<bool> mask(k);
        for (std::size_t in = 0; in < k; ++in) {
            Monotonicity m = Monotonicity::Increasing;
            if (in != out) m = cross_decreasing ? Monotonicity::Decreasing : Monotonicity::None;
            net.input_calibrators.push_back(Calibrator::identity(params, prefix + ".cal_in." + std::to_string(in),
                                                                 config.input_keypoints, m));
            mask[in] = in == out || cross_decreasing;
        }

        net.embedding = std::make_unique<LinearEmbedding>(params, prefix + ".embed", k, dims, mask);
        std::vector<double> coeffs(dims * k);
        for (auto& c : coeffs) c = (1.0 + config.init_jitter * rng.uniform(-1.0, 1.0)) / static_cast<double>(k);
        net.embedding->set(coeffs, std::vector<double>(dims, 0.0));

        for (std::size_t j = 0; j < dims; ++j) {
            net.hidden_calibrators.push_back(Calibrator::identity(params, prefix + ".cal_hidden." + std::to_string(j),
                                                                  config.hidden_keypoints, Monotonicity::Increasing));
        }
        net.lattice = std::make_unique<Lattice>(params, prefix + ".lattice",
                                                std::vector<std::size_t>(dims, config.lattice_vertices),
                                                std::vector<bool>(dims, true));
        subnets_.push_back(std::move(net));
    }
}

Var LatticeNetwork::apply_subnet(Tape& tape, const Subnetwork& net, Var u) const {
    const std::size_t k = net.input_calibrators.size();
    const std::size_t batch = u.value().dim(0);
    std::vector<Var> cols;
    cols.reserve(k);
    for (std::size_t i = 0; i < k; ++i) cols.push_back(net.input_calibrators[i].apply(tape, slice(u, 1, i, i + 1)));
    const Var embedded = net.embedding->apply(tape, concat(cols, 1));
    std::vector<Var> hidden;
    for (std::size_t j = 0; j < net.hidden_calibrators.size(); ++j) {
        hidden.push_back(net.hidden_calibrators[j].apply(tape, slice(embedded, 1, j, j + 1)));
    }
    return reshape(net.lattice->apply(tape, concat(hidden, 1)), {batch, 1});
}

Var LatticeNetwork::apply(Tape& tape, Var u) const {
    if (u.value().rank() != 2 || u.value().dim(1) != subnets_.size()) {
        throw ShapeError("lattice network: expected [B, " + std::to_string(subnets_.size()) + "] input, got " +
                         diffcore::to_string(u.shape()));
    }
    std::vector<Var> outs;
    outs.reserve(subnets_.size());
    for (const auto& net : subnets_) outs.push_back(apply_subnet(tape, net, u));
    return concat(outs, 1);
}

std::vector<double> LatticeNetwork::eval(std::span<const double> u) const {
    if (u.size() != subnets_.size()) {
        throw ShapeError("lattice network: input length " + std::to_string(u.size()) + " != K=" +
                         std::to_string(subnets_.size()));
    }
    std::vector<double> out;
    out.reserve(subnets_.size());
    std::vector<double> calibrated(u.size()), hidden;
    for (const auto& net : subnets_) {
        for (std::size_t i = 0; i < u.size(); ++i) calibrated[i] = net.input_calibrators[i].eval(u[i]);
        hidden = net.embedding->eval(calibrated);
        for (std::size_t j = 0; j < hidden.size(); ++j) hidden[j] = net.hidden_calibrators[j].eval(hidden[j]);
        out.push_back(net.lattice->eval(hidden));
    }
    return out;
}

void LatticeNetwork::project() {
    for (auto& net : subnets_) project_monotone(*net.lattice);
}

bool LatticeNetwork::is_feasible() const {
    return std::all_of(subnets_.begin(), subnets_.end(), [](const Subnetwork& n) { return n.lattice->is_feasible(); });
}

}  // namespace argate::lattice
