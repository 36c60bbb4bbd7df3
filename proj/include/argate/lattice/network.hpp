#pragma once

#include <memory>
#include <string>
#include <vector>

#include "argate/lattice/layers.hpp"
#include "argate/random.hpp"

namespace argate::lattice {

/// How input j != k enters subnetwork k.
enum class CrossInputs {
    Decreasing,  // calibrated as non-increasing, so normalized outputs stay monotone
    Free,        // unconstrained; only the raw output k is guaranteed monotone in input k
};

struct LatticeNetworkConfig {
    std::size_t input_keypoints = 5;
    std::size_t embedding_dims = 0;  // 0 selects min(K, 3)
    std::size_t hidden_keypoints = 5;
    std::size_t lattice_vertices = 2;
    CrossInputs cross_inputs = CrossInputs::Decreasing;
    double init_jitter = 0.05;  // relative spread around the averaging embedding
};

CrossInputs parse_cross_inputs(const std::string& name);
std::string to_string(CrossInputs mode);

/// K independent Cal-Lin-Cal-Lat subnetworks; output k is non-decreasing in
/// input k along the path calibrator(k) -> embedding -> calibrators -> lattice.
class LatticeNetwork {
public:
    LatticeNetwork(ParameterSet& params, const std::string& name, std::size_t k, const LatticeNetworkConfig& config,
                   Rng& rng);

    std::size_t size() const { return subnets_.size(); }
    const LatticeNetworkConfig& config() const { return config_; }

    std::vector<double> eval(std::span<const double> u) const;
    Var apply(Tape& tape, Var u) const;  // [B, K] -> [B, K]

    /// Projection step to call after every optimizer update.
    void project();
    bool is_feasible() const;

    struct Subnetwork {
        std::vector<Calibrator> input_calibrators;
        std::unique_ptr<LinearEmbedding> embedding;
        std::vector<Calibrator> hidden_calibrators;
        std::unique_ptr<Lattice> lattice;
    };
    const Subnetwork& subnetwork(std::size_t k) const { return subnets_.at(k); }
    Subnetwork& subnetwork(std::size_t k) { return subnets_.at(k); }

private:
    Var apply_subnet(Tape& tape, const Subnetwork& net, Var u) const;

    LatticeNetworkConfig config_;
    std::vector<Subnetwork> subnets_;
};

/// dln_eval: raw (unnormalized) fusion targets for a transformed loss vector.
inline std::vector<double> dln_eval(const LatticeNetwork& net, std::span<const double> u) { return net.eval(u); }

}  // namespace argate::lattice
