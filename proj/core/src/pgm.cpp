#include "uvae/pgm.hpp"

#include <cmath>
#include <fstream>

#include "uvae/errors.hpp"

namespace uvae {

void write_pgm(const std::string& path, std::size_t height, std::size_t width,
               const Tensor& values01) {
    if (values01.size() != height * width) {
        throw ContractError("write_pgm: value count does not match dimensions");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw NumericError("cannot open for writing: " + path);
    os << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes(values01.size());
    for (std::size_t i = 0; i < values01.size(); ++i) {
        double v = std::min(std::max(values01[i], 0.0), 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw NumericError("write failed: " + path);
}

} // namespace uvae
