#include "argate/diffcore/parameter.hpp"

#include <stdexcept>

namespace argate::diffcore {

Parameter::Parameter(std::string name_, Tensor initial)
    : name(std::move(name_)), value(std::move(initial)), grad(Tensor::filled(value.shape(), 0.0)) {}

Parameter& ParameterSet::add(std::string name, Tensor initial) {
    if (index_.contains(name)) {
        throw std::invalid_argument("parameter set: duplicate name '" + name + "'");
    }
    index_.emplace(name, params_.size());
    params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(initial)));
    return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
    const auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParameterSet::find(const std::string& name) const {
    const auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParameterSet::at(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw std::out_of_range("parameter set: no parameter named '" + name + "'");
}

const Parameter& ParameterSet::at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw std::out_of_range("parameter set: no parameter named '" + name + "'");
}

std::vector<Parameter*> ParameterSet::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<Parameter*> ParameterSet::with_prefix(const std::string& prefix) {
    std::vector<Parameter*> out;
    for (auto& p : params_) {
        if (p->name.starts_with(prefix)) out.push_back(p.get());
    }
    return out;
}

std::size_t ParameterSet::element_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

}  // namespace argate::diffcore
