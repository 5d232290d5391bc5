#include "tversky/io/pgm.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tversky {

void write_file_atomic(const std::string& path, const std::string& bytes) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
    }
}

void write_pgm(const std::string& path, int64_t height, int64_t width,
               const std::vector<uint8_t>& pixels) {
    if (static_cast<int64_t>(pixels.size()) != height * width)
        throw std::invalid_argument("pgm: pixel count mismatch");
    std::string bytes = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    bytes.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    write_file_atomic(path, bytes);
}

PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("pgm: bad magic in " + path);
    PgmImage img;
    int64_t maxval = 0;
    in >> img.width >> img.height >> maxval;
    if (maxval != 255) throw std::runtime_error("pgm: unsupported maxval in " + path);
    in.get();  // single whitespace after header
    img.pixels.resize(static_cast<size_t>(img.width * img.height));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error("pgm: truncated " + path);
    return img;
}

}  // namespace tversky
