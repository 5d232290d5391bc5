#pragma once

#include <string>
#include <vector>

namespace tversky {

// Floating-point emission at 9 significant digits (round-trip safe for f32).
std::string format_float(double v);

// Fixed column order set at construction; save() writes atomically.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);
    void row(const std::vector<std::string>& cells);
    const std::string& text() const { return text_; }
    size_t rows() const { return rows_; }
    void save(const std::string& path) const;

private:
    size_t width_;
    size_t rows_ = 0;
    std::string text_;
};

// Minimal reader for resume and round-trip checks: first row is the header.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv_file(const std::string& path);

}  // namespace tversky
