#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "argate/diffcore/parameter.hpp"
#include "argate/diffcore/tensor.hpp"

namespace argate::diffcore {

using NodeId = std::size_t;

/// Closed primitive set. The last two exist for the lattice layers.
enum class OpKind : std::uint8_t {
    Constant,
    Parameter,
    MatMul,
    Conv1d,
    MaxPool1d,
    Relu,
    Sigmoid,
    Softmax,
    Exp,
    Square,
    Neg,
    Softplus,
    Add,
    Mul,
    Concat,
    Reshape,
    Slice,
    Mean,
    Sum,
    CumSum,
    SoftmaxCrossEntropy,
    StopGradient,
    PiecewiseLinear,
    Multilinear,
};

std::string_view op_name(OpKind kind);

/// Per-op configuration. Only the fields an op reads are meaningful.
struct OpAttrs {
    std::optional<std::size_t> axis;  // Mean/Sum: nullopt reduces everything
    std::size_t stride = 1;           // Conv1d
    std::size_t window = 2;           // MaxPool1d
    std::size_t begin = 0;            // Slice
    std::size_t end = 0;
    Shape shape;                      // Reshape
    std::vector<std::size_t> labels;  // SoftmaxCrossEntropy
    std::vector<double> keypoints;    // PiecewiseLinear
    std::vector<std::size_t> sizes;   // Multilinear: vertices per dimension
};

struct Node {
    OpKind kind = OpKind::Constant;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    Tensor value;
    Tensor saved;  // forward context needed by the pullback
    std::vector<std::size_t> saved_index;
    Parameter* parameter = nullptr;
    std::uint64_t parameter_version = 0;
    bool requires_grad = false;
};

/// Append-only record of a forward pass. Node ids are assigned in
/// creation order, so the tape is topologically sorted by construction.
class Tape {
public:
    NodeId constant(Tensor value);
    /// Binds a parameter; binding the same parameter twice yields one node.
    NodeId parameter(Parameter& param);

    NodeId push(Node node);

    const Node& node(NodeId id) const;
    const Tensor& value(NodeId id) const { return node(id).value; }
    bool requires_grad(NodeId id) const { return node(id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }
    void clear();

private:
    std::deque<Node> nodes_;  // stable addresses: values are handed out by reference
    std::unordered_map<const Parameter*, NodeId> bound_;
};

/// Gradients of one scalar with respect to every node that needs them.
class Gradients {
public:
    explicit Gradients(std::size_t n) : grads_(n), present_(n, false) {}

    bool has(NodeId id) const { return id < present_.size() && present_[id]; }
    const Tensor& of(NodeId id) const;
    Tensor& slot(NodeId id, const Shape& shape);

private:
    std::vector<Tensor> grads_;
    std::vector<bool> present_;
};

/// Reverse sweep from `loss`, which must be a single-element node.
/// Throws if a bound parameter changed after it was recorded.
Gradients backward(const Tape& tape, NodeId loss);

/// Adds each parameter node's gradient into its Parameter::grad.
void accumulate_parameter_grads(const Tape& tape, const Gradients& grads);

/// `backward` followed by `accumulate_parameter_grads`.
void backward_into_parameters(const Tape& tape, NodeId loss);

}  // namespace argate::diffcore
