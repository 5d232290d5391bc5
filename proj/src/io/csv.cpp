#include "tversky/io/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tversky/io/pgm.hpp"

namespace tversky {

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace {

void append_cell(std::string& out, const std::string& cell) {
    bool needs_quote = cell.find_first_of(",\"\n") != std::string::npos;
    if (!needs_quote) {
        out += cell;
        return;
    }
    out += '"';
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

}  // namespace

CsvWriter::CsvWriter(std::vector<std::string> columns) : width_(columns.size()) {
    if (columns.empty()) throw std::invalid_argument("csv: no columns");
    for (size_t i = 0; i < columns.size(); ++i) {
        if (i) text_ += ',';
        append_cell(text_, columns[i]);
    }
    text_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw std::invalid_argument("csv: expected " + std::to_string(width_) + " cells, got " +
                                    std::to_string(cells.size()));
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) text_ += ',';
        append_cell(text_, cells[i]);
    }
    text_ += '\n';
    ++rows_;
}

void CsvWriter::save(const std::string& path) const { write_file_atomic(path, text_); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    size_t i = 0;
    auto end_cell = [&] {
        row.push_back(cell);
        cell.clear();
    };
    auto end_row = [&] {
        end_cell();
        rows.push_back(row);
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            end_cell();
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            cell += c;
        }
        ++i;
    }
    if (!cell.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<std::vector<std::string>> read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace tversky
