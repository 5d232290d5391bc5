#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tversky {

// Binary P5, maxval 255, written atomically (temp file + rename).
void write_pgm(const std::string& path, int64_t height, int64_t width,
               const std::vector<uint8_t>& pixels);

struct PgmImage {
    int64_t height = 0, width = 0;
    std::vector<uint8_t> pixels;
};

PgmImage read_pgm(const std::string& path);

// Whole-file atomic write used by every emitter.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace tversky
