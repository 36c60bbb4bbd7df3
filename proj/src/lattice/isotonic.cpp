#include "argate/lattice/isotonic.hpp"

#include <vector>

namespace argate::lattice {

void isotonic_projection(std::span<double> values) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            const Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    std::size_t i = 0;
    for (const Block& b : blocks) {
        const double m = b.mean();
        for (std::size_t k = 0; k < b.count; ++k) values[i++] = m;
    }
}

bool is_non_decreasing(std::span<const double> values) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1]) return false;
    }
    return true;
}

}  // namespace argate::lattice
