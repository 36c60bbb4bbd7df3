#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace argate::diffcore {

/// File header shared by checkpoints and dataset caches: "ARGT" + u32 version.
inline constexpr char kMagic[4] = {'A', 'R', 'G', 'T'};
inline constexpr std::uint32_t kFormatVersion = 1;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Little-endian primitive writer.
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    void header();
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64s(std::span<const double> values);
    void string(const std::string& s);  // u64 length + UTF-8 bytes

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}

    void header();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void f64s(std::span<double> out);
    std::string string();
    bool at_end();

private:
    void read(char* dst, std::size_t n);
    std::istream& in_;
};

}  // namespace argate::diffcore
