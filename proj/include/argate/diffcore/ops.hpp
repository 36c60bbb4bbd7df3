#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "argate/diffcore/tape.hpp"

namespace argate::diffcore {

/// Generic entry point: validates shapes, computes the output and records it.
NodeId forward(OpKind kind, std::span<const NodeId> inputs, Tape& tape, const OpAttrs& attrs = {});

/// Lightweight handle to a node on a tape.
class Var {
public:
    Var() = default;  // unbound; only valid as a placeholder to assign over
    Var(Tape& tape, NodeId id) : tape_(&tape), id_(id) {}

    bool bound() const { return tape_ != nullptr; }

    Tape& tape() const { return *tape_; }
    NodeId id() const { return id_; }
    const Tensor& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }

private:
    Tape* tape_ = nullptr;
    NodeId id_ = 0;
};

Var constant(Tape& tape, Tensor value);
Var param(Tape& tape, Parameter& p);

Var matmul(Var a, Var b);
// x: [B, Cin, L], w: [Cout, Cin, K], bias: [Cout]. Valid padding.
Var conv1d(Var x, Var w, Var bias, std::size_t stride = 1);
// Non-overlapping windows over the last axis; ties go to the first index.
Var maxpool1d(Var x, std::size_t window = 2);

Var relu(Var x);
Var sigmoid(Var x);
Var softmax(Var x);  // over the last axis
Var exp(Var x);
Var square(Var x);
Var neg(Var x);
Var softplus(Var x);

// Elementwise with trailing-aligned broadcasting.
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);

Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var reshape(Var x, Shape shape);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);

Var sum(Var x);
Var sum(Var x, std::size_t axis);
Var mean(Var x);
Var mean(Var x, std::size_t axis);
Var cumsum(Var x);  // over the last axis

// logits: [B, C]; returns per-example losses [B].
Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);

Var stop_gradient(Var x);

// Clamped linear interpolation of `outputs` at `keypoints`, applied elementwise.
Var piecewise_linear(Var x, Var outputs, std::span<const double> keypoints);
// x: [B, d] clamped to the unit cube; vertices: prod(sizes) row-major. Returns [B].
Var multilinear(Var x, Var vertices, std::span<const std::size_t> sizes);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator-(Var a, Var b) { return add(a, neg(b)); }

}  // namespace argate::diffcore
