#pragma once

#include <span>
#include <string>
#include <vector>

#include "argate/diffcore/ops.hpp"
#include "argate/diffcore/parameter.hpp"

namespace argate::lattice {

using diffcore::Parameter;
using diffcore::ParameterSet;
using diffcore::Tape;
using diffcore::Tensor;
using diffcore::Var;

enum class Monotonicity { None, Increasing, Decreasing };

/// Inverse of softplus for y > 0.
double inverse_softplus(double y);

/// 1-d piecewise-linear lookup over fixed input keypoints.
///
/// Monotone calibrators store `raw[0]` as the first output and
/// `softplus(raw[i])` as the i-th increment, so every parameter value gives
/// an ordered output sequence. Inputs outside the keypoint range clamp.
class Calibrator {
public:
    Calibrator(ParameterSet& params, const std::string& name, std::vector<double> keypoints,
               Monotonicity monotonicity, std::span<const double> initial_outputs);

    /// Identity (or 1 - x for decreasing) over `count` keypoints spread on [0, 1].
    static Calibrator identity(ParameterSet& params, const std::string& name, std::size_t count,
                               Monotonicity monotonicity);

    const std::vector<double>& keypoints() const { return keypoints_; }
    Monotonicity monotonicity() const { return monotonicity_; }
    std::vector<double> output_keypoints() const;

    double eval(double x) const;
    Var apply(Tape& tape, Var x) const;

private:
    Var outputs(Tape& tape) const;

    std::vector<double> keypoints_;
    Monotonicity monotonicity_;
    Parameter* raw_;
};

/// y = x W + b with W stored as [in, out]. Columns of W^T flagged in the
/// mask (i.e. rows of the stored matrix) are passed through softplus.
class LinearEmbedding {
public:
    LinearEmbedding(ParameterSet& params, const std::string& name, std::size_t inputs, std::size_t outputs,
                    std::vector<bool> monotone_inputs);

    std::size_t inputs() const { return inputs_; }
    std::size_t outputs() const { return outputs_; }
    const std::vector<bool>& monotone_inputs() const { return monotone_; }

    /// Sets effective coefficients (out x in, row-major) and bias. Masked
    /// coefficients must be positive.
    void set(std::span<const double> coefficients, std::span<const double> bias);
    Parameter& raw_coefficients() { return *raw_; }

    /// Effective coefficients as out x in, row-major.
    std::vector<double> coefficients() const;

    std::vector<double> eval(std::span<const double> x) const;
    Var apply(Tape& tape, Var x) const;  // x: [B, in] -> [B, out]

private:
    std::size_t inputs_, outputs_;
    std::vector<bool> monotone_;
    Parameter* raw_;
    Parameter* bias_;
};

/// Multilinearly interpolated lookup table on the unit cube.
class Lattice {
public:
    Lattice(ParameterSet& params, const std::string& name, std::vector<std::size_t> sizes,
            std::vector<bool> monotone_dims);

    std::size_t dimension() const { return sizes_.size(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    const std::vector<bool>& monotone_dims() const { return monotone_; }
    Parameter& vertices() { return *vertices_; }
    const Parameter& vertices() const { return *vertices_; }

    /// Vertex value = mean of the vertex's coordinates.
    void init_linear_ramp();

    double eval(std::span<const double> x) const;
    Var apply(Tape& tape, Var x) const;  // [B, d] -> [B]

    bool is_feasible() const;

private:
    std::vector<std::size_t> sizes_;
    std::vector<bool> monotone_;
    Parameter* vertices_;
};

/// Restores monotonicity along every flagged dimension by isotonic
/// projection of each 1-d fiber, one dimension per pass, until nothing
/// changes (at most 10 sweeps). Feasible vertices are left untouched.
void project_monotone(Lattice& lattice);

}  // namespace argate::lattice
