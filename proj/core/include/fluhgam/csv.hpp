#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fluhgam {

// Minimal CSV support for the fixed, unquoted schemas this project reads and
// writes: comma-separated, UTF-8, LF line endings, one header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line per row
};

CsvTable read_csv(const std::string& path);

// Throws SchemaError (with the file name) unless the header matches exactly.
void require_header(const CsvTable& table, const std::vector<std::string>& expected,
                    const std::string& path);

std::int64_t parse_int_field(const std::string& field, const std::string& path,
                             std::size_t line);
double parse_real_field(const std::string& field, const std::string& path, std::size_t line);

// Fixed-format numeric rendering so that identical runs emit identical bytes.
std::string format_real(double x);

void write_text_file(const std::string& path, const std::string& contents);

} // namespace fluhgam
