#pragma once

#include "argate/diffcore/tape.hpp"

namespace argate::diffcore::detail {

// Propagates `grad_out` of node `id` into the gradient slots of its inputs.
void pullback(const Tape& tape, NodeId id, const Tensor& grad_out, Gradients& grads);

}  // namespace argate::diffcore::detail
