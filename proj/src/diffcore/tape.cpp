#include "argate/diffcore/tape.hpp"

#include <stdexcept>
#include <string>

#include "pullback.hpp"

namespace argate::diffcore {

NodeId Tape::constant(Tensor value) {
    Node n;
    n.kind = OpKind::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::parameter(Parameter& param) {
    if (const auto it = bound_.find(&param); it != bound_.end()) return it->second;
    Node n;
    n.kind = OpKind::Parameter;
    n.value = param.value;
    n.parameter = &param;
    n.parameter_version = param.version;
    n.requires_grad = true;
    const NodeId id = push(std::move(n));
    bound_.emplace(&param, id);
    return id;
}

NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

const Node& Tape::node(NodeId id) const {
    if (id >= nodes_.size()) throw std::out_of_range("tape: node " + std::to_string(id) + " not recorded");
    return nodes_[id];
}

void Tape::clear() {
    nodes_.clear();
    bound_.clear();
}

const Tensor& Gradients::of(NodeId id) const {
    if (!has(id)) throw std::out_of_range("gradients: no gradient for node " + std::to_string(id));
    return grads_[id];
}

Tensor& Gradients::slot(NodeId id, const Shape& shape) {
    if (!present_[id]) {
        grads_[id] = Tensor(shape);
        present_[id] = true;
    }
    return grads_[id];
}

Gradients backward(const Tape& tape, NodeId loss) {
    const Node& out = tape.node(loss);
    if (out.value.size() != 1) {
        throw ShapeError("backward: loss must be a scalar, got shape " + to_string(out.value.shape()));
    }
    for (NodeId id = 0; id <= loss; ++id) {
        const Node& n = tape.node(id);
        if (n.parameter && n.parameter->version != n.parameter_version) {
            throw std::logic_error("backward: parameter '" + n.parameter->name +
                                   "' was modified after the forward pass was recorded");
        }
    }
    Gradients grads(tape.size());
    if (!out.requires_grad) return grads;
    grads.slot(loss, out.value.shape()).fill(1.0);
    for (NodeId id = loss + 1; id-- > 0;) {
        if (!grads.has(id) || !tape.node(id).requires_grad) continue;
        detail::pullback(tape, id, grads.of(id), grads);
    }
    return grads;
}

void accumulate_parameter_grads(const Tape& tape, const Gradients& grads) {
    for (NodeId id = 0; id < tape.size(); ++id) {
        const Node& n = tape.node(id);
        if (!n.parameter || !grads.has(id)) continue;
        const Tensor& g = grads.of(id);
        Tensor& acc = n.parameter->grad;
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
}

void backward_into_parameters(const Tape& tape, NodeId loss) {
    accumulate_parameter_grads(tape, backward(tape, loss));
}

}  // namespace argate::diffcore
