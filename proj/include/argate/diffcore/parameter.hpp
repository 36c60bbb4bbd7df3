#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "argate/diffcore/tensor.hpp"

namespace argate::diffcore {

/// A trainable tensor with its gradient accumulator and optimizer state.
struct Parameter {
    Parameter(std::string name, Tensor initial);

    std::string name;
    Tensor value;
    Tensor grad;
    // Adam moment buffers; allocated lazily by the optimizer.
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t steps = 0;
    // Bumped whenever `value` is changed in place. Tapes use it to detect
    // stale recordings.
    std::uint64_t version = 0;

    void zero_grad() { grad.fill(0.0); }
    void touch() { ++version; }
};

/// Owns parameters in insertion order. References stay valid for the
/// lifetime of the set.
class ParameterSet {
public:
    Parameter& add(std::string name, Tensor initial);

    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::vector<Parameter*> with_prefix(const std::string& prefix);

    std::size_t size() const { return params_.size(); }
    std::size_t element_count() const;
    void zero_grad();

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace argate::diffcore
