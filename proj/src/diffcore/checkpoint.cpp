#include "argate/diffcore/checkpoint.hpp"

#include <fstream>

#include "argate/diffcore/binary_io.hpp"

namespace argate::diffcore {

namespace {
constexpr std::uint64_t kMaxRank = 16;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::function<bool(const Parameter&)>& keep) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for writing");
    BinaryWriter w(out);
    w.header();
    for (const Parameter* p : params.all()) {
        if (keep && !keep(*p)) continue;
        w.string(p->name);
        w.u64(p->value.rank());
        for (std::size_t d : p->value.shape()) w.u64(d);
        w.f64s(p->value.values());
    }
    out.flush();
    if (!out) throw std::runtime_error("checkpoint: write to '" + path.string() + "' failed");
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");
    BinaryReader r(in);
    r.header();
    NamedTensors out;
    while (!r.at_end()) {
        std::string name = r.string();
        const std::uint64_t rank = r.u64();
        if (rank > kMaxRank) throw FormatError("checkpoint: rank " + std::to_string(rank) + " for '" + name + "'");
        Shape shape(rank);
        for (auto& d : shape) d = r.u64();
        Tensor t(shape);
        r.f64s(t.values());
        if (!out.emplace(name, std::move(t)).second) throw FormatError("checkpoint: duplicate record '" + name + "'");
    }
    return out;
}

void restore_parameters(ParameterSet& params, const NamedTensors& tensors, bool allow_missing) {
    for (const auto& [name, t] : tensors) {
        Parameter* p = params.find(name);
        if (!p) throw FormatError("checkpoint: unknown parameter '" + name + "'");
        if (p->value.shape() != t.shape()) {
            throw FormatError("checkpoint: shape " + to_string(t.shape()) + " for '" + name + "', model expects " +
                              to_string(p->value.shape()));
        }
        p->value = t;
        p->touch();
    }
    if (!allow_missing) {
        for (const Parameter* p : params.all()) {
            if (!tensors.contains(p->name)) throw FormatError("checkpoint: missing parameter '" + p->name + "'");
        }
    }
}

}  // namespace argate::diffcore
