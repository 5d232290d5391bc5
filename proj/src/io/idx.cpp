#include "tversky/io/idx.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace tversky {

namespace {

uint32_t read_u32_be(std::istream& in, const std::string& path, size_t& offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4)
        throw std::runtime_error("idx: truncated file " + path + " at byte " +
                                 std::to_string(offset));
    offset += 4;
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

void write_u32_be(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

DatasetHandle load_idx(const std::string& images_path, const std::string& labels_path,
                       const std::string& split_tag) {
    std::ifstream imf(images_path, std::ios::binary);
    if (!imf) throw std::runtime_error("idx: cannot open " + images_path);
    size_t off = 0;
    uint32_t magic = read_u32_be(imf, images_path, off);
    if (magic != 0x00000803u)
        throw std::runtime_error("idx: bad image magic in " + images_path + " at byte 0 (got " +
                                 std::to_string(magic) + ")");
    uint32_t n = read_u32_be(imf, images_path, off);
    uint32_t rows = read_u32_be(imf, images_path, off);
    uint32_t cols = read_u32_be(imf, images_path, off);
    if (rows != 28 || cols != 28)
        throw std::runtime_error("idx: expected 28x28 images in " + images_path + ", got " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    std::vector<unsigned char> pixels(static_cast<size_t>(n) * rows * cols);
    imf.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (imf.gcount() != static_cast<std::streamsize>(pixels.size()))
        throw std::runtime_error("idx: truncated file " + images_path + " at byte " +
                                 std::to_string(off + static_cast<size_t>(imf.gcount())));

    std::ifstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw std::runtime_error("idx: cannot open " + labels_path);
    size_t loff = 0;
    uint32_t lmagic = read_u32_be(lbf, labels_path, loff);
    if (lmagic != 0x00000801u)
        throw std::runtime_error("idx: bad label magic in " + labels_path + " at byte 0 (got " +
                                 std::to_string(lmagic) + ")");
    uint32_t ln = read_u32_be(lbf, labels_path, loff);
    if (ln != n)
        throw std::runtime_error("idx: image/label count mismatch (" + std::to_string(n) + " vs " +
                                 std::to_string(ln) + ")");
    std::vector<unsigned char> raw_labels(ln);
    lbf.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(ln));
    if (lbf.gcount() != static_cast<std::streamsize>(ln))
        throw std::runtime_error("idx: truncated file " + labels_path + " at byte " +
                                 std::to_string(loff + static_cast<size_t>(lbf.gcount())));

    DatasetHandle ds;
    ds.split = split_tag;
    ds.images = Tensor<float>({static_cast<int64_t>(n), 1, 28, 28});
    for (size_t i = 0; i < pixels.size(); ++i)
        ds.images.data[i] = static_cast<float>(pixels[i]) / 255.0f;
    ds.labels.reserve(ln);
    for (unsigned char l : raw_labels) ds.labels.push_back(static_cast<int64_t>(l));
    return ds;
}

void save_idx(const DatasetHandle& ds, const std::string& images_path,
              const std::string& labels_path) {
    std::ofstream imf(images_path, std::ios::binary);
    if (!imf) throw std::runtime_error("idx: cannot write " + images_path);
    uint32_t n = static_cast<uint32_t>(ds.size());
    write_u32_be(imf, 0x00000803u);
    write_u32_be(imf, n);
    write_u32_be(imf, 28);
    write_u32_be(imf, 28);
    for (float v : ds.images.data) {
        float clamped = std::min(1.0f, std::max(0.0f, v));
        unsigned char b = static_cast<unsigned char>(clamped * 255.0f + 0.5f);
        imf.write(reinterpret_cast<char*>(&b), 1);
    }
    std::ofstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw std::runtime_error("idx: cannot write " + labels_path);
    write_u32_be(lbf, 0x00000801u);
    write_u32_be(lbf, n);
    for (int64_t l : ds.labels) {
        unsigned char b = static_cast<unsigned char>(l);
        lbf.write(reinterpret_cast<char*>(&b), 1);
    }
}

}  // namespace tversky
