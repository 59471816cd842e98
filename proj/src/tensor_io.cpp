#include "cdg/errors.hpp"
#include "cdg/tensor.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cdg {

std::string to_string(const Dims& dims) {
    std::ostringstream os;
    os << '(' << dims[0] << ',' << dims[1] << ',' << dims[2] << ',' << dims[3] << ')';
    return os.str();
}

namespace {

constexpr char kMagic[4] = {'C', 'D', 'G', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 * 4;

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int nbytes) {
    std::uint64_t v = 0;
    for (int b = 0; b < nbytes; ++b)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
    return v;
}

}  // namespace

std::string encode_cdg(const Tensor4& t) {
    if (t.empty()) throw std::invalid_argument("encode_cdg: empty tensor");
    std::string out;
    out.reserve(kHeaderBytes + 8 * t.size());
    out.append(kMagic, 4);
    put_u32(out, 4);
    for (auto d : t.dims()) {
        if (d > 0xFFFFFFFFull) throw std::invalid_argument("encode_cdg: dimension exceeds u32");
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (Eigen::Index k = 0; k < t.data().size(); ++k) put_f64(out, t.data()[k]);
    return out;
}

Tensor4 decode_cdg(const std::string& bytes) {
    if (bytes.size() < kHeaderBytes) throw ParseError("CDG1: truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("CDG1: wrong magic");
    const auto ndim = get_le(bytes, 4, 4);
    if (ndim != 4) throw ParseError("CDG1: ndim must be 4, got " + std::to_string(ndim));
    Dims dims{};
    for (std::size_t k = 0; k < 4; ++k) {
        dims[k] = get_le(bytes, 8 + 4 * k, 4);
        if (dims[k] == 0) throw ParseError("CDG1: zero dimension");
    }
    const std::size_t n = element_count(dims);
    if (bytes.size() != kHeaderBytes + 8 * n)
        throw ParseError("CDG1: expected " + std::to_string(kHeaderBytes + 8 * n) + " bytes, got " +
                         std::to_string(bytes.size()));
    Tensor4 t(dims);
    for (std::size_t k = 0; k < n; ++k)
        t.data()[static_cast<Eigen::Index>(k)] =
            std::bit_cast<double>(get_le(bytes, kHeaderBytes + 8 * k, 8));
    return t;
}

void write_cdg(const std::filesystem::path& path, const Tensor4& t) {
    const std::string bytes = encode_cdg(t);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

Tensor4 read_cdg(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return decode_cdg(buf.str());
}

}  // namespace cdg
