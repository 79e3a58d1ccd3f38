#include "sonalyzer/cache.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

namespace sonalyzer {

static_assert(std::endian::native == std::endian::little,
              "feature cache layout assumes a little-endian host");

void write_feature_cache(const std::string& path, const Matf& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write cache: " + path);
    const auto rows = static_cast<std::uint32_t>(m.rows());
    const auto cols = static_cast<std::uint64_t>(m.cols());
    f.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    f.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    // Eigen's default storage is column-major, matching the file layout.
    f.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float) * m.size()));
    if (!f) throw IoError("cache write failed: " + path);
}

Matf read_feature_cache(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open cache: " + path);
    std::uint32_t rows = 0;
    std::uint64_t cols = 0;
    f.read(reinterpret_cast<char*>(&rows), sizeof rows);
    f.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!f) throw IoError("truncated cache header: " + path);
    Matf m(rows, cols);
    f.read(reinterpret_cast<char*>(m.data()),
           static_cast<std::streamsize>(sizeof(float) * m.size()));
    if (!f) throw IoError("truncated cache data: " + path);
    return m;
}

}  // namespace sonalyzer
