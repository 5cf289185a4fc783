#include "uvae/idx.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "uvae/errors.hpp"

namespace uvae {

namespace {
constexpr unsigned char kTypeUByte = 0x08;
}

Tensor load_idx(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open idx file: " + path, 0);

    unsigned char header[4];
    is.read(reinterpret_cast<char*>(header), 4);
    if (!is) throw ParseError("truncated idx header", 0);
    if (header[0] != 0x00) throw ParseError("bad idx magic byte", 0);
    if (header[1] != 0x00) throw ParseError("bad idx magic byte", 1);
    if (header[2] != kTypeUByte) throw ParseError("unsupported idx type code", 2);
    std::size_t rank = header[3];
    if (rank == 0) throw ParseError("idx rank must be positive", 3);

    std::size_t offset = 4;
    std::vector<std::size_t> shape(rank);
    for (std::size_t d = 0; d < rank; ++d) {
        unsigned char buf[4];
        is.read(reinterpret_cast<char*>(buf), 4);
        if (!is) throw ParseError("truncated idx dimension", offset);
        shape[d] = (std::size_t(buf[0]) << 24) | (std::size_t(buf[1]) << 16) |
                   (std::size_t(buf[2]) << 8) | std::size_t(buf[3]);
        offset += 4;
    }

    std::size_t n = shape_volume(shape);
    std::vector<unsigned char> payload(n);
    is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw ParseError("truncated idx payload", offset + static_cast<std::size_t>(is.gcount()));
    }

    Tensor out = Tensor::zeros(shape);
    if (rank == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(payload[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(payload[i]) / 255.0;
    }
    return out;
}

void write_idx(const std::string& path, const Tensor& values) {
    if (values.rank() == 0 || values.rank() > 255) {
        throw ContractError("write_idx: rank must be in [1, 255]");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw NumericError("cannot open for writing: " + path);
    unsigned char header[4] = {0x00, 0x00, kTypeUByte, static_cast<unsigned char>(values.rank())};
    os.write(reinterpret_cast<const char*>(header), 4);
    for (std::size_t e : values.shape) {
        unsigned char buf[4] = {static_cast<unsigned char>(e >> 24),
                                static_cast<unsigned char>(e >> 16),
                                static_cast<unsigned char>(e >> 8),
                                static_cast<unsigned char>(e)};
        os.write(reinterpret_cast<const char*>(buf), 4);
    }
    std::vector<unsigned char> payload(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = values[i];
        if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
            throw ContractError("write_idx: values must be integers in [0, 255]");
        }
        payload[i] = static_cast<unsigned char>(v);
    }
    os.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size()));
    if (!os) throw NumericError("write failed: " + path);
}

} // namespace uvae
