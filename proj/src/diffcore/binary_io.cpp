#include "argate/diffcore/binary_io.hpp"

#include <bit>
#include <cstring>

namespace argate::diffcore {

namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, sizeof(U));
}

template <typename U>
U get_le(const unsigned char* buf) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
}

// Guards allocation from corrupt length fields.
constexpr std::uint64_t kMaxStringBytes = std::uint64_t{1} << 20;

}  // namespace

void BinaryWriter::header() {
    out_.write(kMagic, 4);
    u32(kFormatVersion);
}

void BinaryWriter::u32(std::uint32_t v) { put_le(out_, v); }
void BinaryWriter::u64(std::uint64_t v) { put_le(out_, v); }
void BinaryWriter::f64(double v) { put_le(out_, std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::f64s(std::span<const double> values) {
    std::vector<char> buf(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (std::size_t b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void BinaryWriter::string(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryReader::read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("unexpected end of file");
}

void BinaryReader::header() {
    char magic[4];
    read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic bytes (expected ARGT)");
    const std::uint32_t version = u32();
    if (version != kFormatVersion) throw FormatError("unsupported format version " + std::to_string(version));
}

std::uint32_t BinaryReader::u32() {
    unsigned char buf[4];
    read(reinterpret_cast<char*>(buf), 4);
    return get_le<std::uint32_t>(buf);
}

std::uint64_t BinaryReader::u64() {
    unsigned char buf[8];
    read(reinterpret_cast<char*>(buf), 8);
    return get_le<std::uint64_t>(buf);
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::f64s(std::span<double> out) {
    std::vector<unsigned char> buf(out.size() * 8);
    read(reinterpret_cast<char*>(buf.data()), buf.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<double>(get_le<std::uint64_t>(&buf[i * 8]));
}

std::string BinaryReader::string() {
    const std::uint64_t n = u64();
    if (n > kMaxStringBytes) throw FormatError("string length " + std::to_string(n) + " is implausible");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
}

bool BinaryReader::at_end() { return in_.peek() == std::char_traits<char>::eof(); }

}  // namespace argate::diffcore
