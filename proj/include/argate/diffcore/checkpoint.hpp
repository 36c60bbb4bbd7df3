#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "argate/diffcore/parameter.hpp"

namespace argate::diffcore {

// Layout: "ARGT", u32 version, then until EOF one record per parameter:
//   u64 name length, UTF-8 name, u64 rank, rank x u64 dims, values as LE f64.
using NamedTensors = std::map<std::string, Tensor>;

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::function<bool(const Parameter&)>& keep = {});
NamedTensors load_checkpoint(const std::filesystem::path& path);

/// Copies matching tensors into `params`. Missing names are an error unless
/// `allow_missing`; extra names in the file are always an error.
void restore_parameters(ParameterSet& params, const NamedTensors& tensors, bool allow_missing = false);

}  // namespace argate::diffcore
