#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "argate/data/dataset.hpp"

namespace argate::testing {

/// 30 examples, 5 channels of length 8, exact dyadic values. Golden hashes
/// for it come from fixtures/corruption_oracle.py.
inline data::Dataset corruption_fixture() {
    data::Dataset d;
    for (int k = 0; k < 5; ++k) d.channels.push_back("c" + std::to_string(k));
    d.classes = {"a", "b"};
    d.length = 8;
    std::vector<double> example(40);
    for (int n = 0; n < 30; ++n) {
        for (int k = 0; k < 5; ++k)
            for (int t = 0; t < 8; ++t) example[k * 8 + t] = ((n * 31 + k * 7 + t) % 17) / 8.0 - 1.0;
        d.push_back(example, static_cast<std::size_t>(n % 2));
    }
    return d;
}

/// FNV-1a 64 over the little-endian bytes of every value.
inline std::uint64_t fnv1a(const std::vector<double>& values) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double v : values) {
        unsigned char bytes[8];
        std::memcpy(bytes, &v, 8);
        for (unsigned char b : bytes) h = (h ^ b) * 0x100000001B3ULL;
    }
    return h;
}

}  // namespace argate::testing
