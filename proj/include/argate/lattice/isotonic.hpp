#pragma once

#include <span>

namespace argate::lattice {

/// Euclidean projection of `values` onto non-decreasing sequences
/// (pool-adjacent-violators, unit weights). In place.
void isotonic_projection(std::span<double> values);

bool is_non_decreasing(std::span<const double> values);

}  // namespace argate::lattice
