#include "fluhgam/csv.hpp"

#include "fluhgam/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fluhgam {

namespace {

std::vector<std::string> split_comma(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (table.header.empty()) {
            table.header = split_comma(line);
        } else {
            table.rows.push_back(split_comma(line));
            table.line_numbers.push_back(lineno);
        }
    }
    if (table.header.empty()) throw SchemaError("'" + path + "' is empty");
    return table;
}

void require_header(const CsvTable& table, const std::vector<std::string>& expected,
                    const std::string& path) {
    if (table.header != expected) {
        std::ostringstream oss;
        oss << "'" << path << "': expected header ";
        for (std::size_t i = 0; i < expected.size(); ++i)
            oss << (i ? "," : "") << expected[i];
        oss << " but found ";
        for (std::size_t i = 0; i < table.header.size(); ++i)
            oss << (i ? "," : "") << table.header[i];
        throw SchemaError(oss.str());
    }
}

std::int64_t parse_int_field(const std::string& field, const std::string& path,
                             std::size_t line) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw SchemaError("'" + path + "' line " + std::to_string(line) +
                          ": not an integer: '" + field + "'");
    }
    return value;
}

double parse_real_field(const std::string& field, const std::string& path, std::size_t line) {
    try {
        std::size_t consumed = 0;
        double value = std::stod(field, &consumed);
        if (consumed != field.size() || !std::isfinite(value)) throw std::invalid_argument(field);
        return value;
    } catch (const std::exception&) {
        throw SchemaError("'" + path + "' line " + std::to_string(line) +
                          ": not a real number: '" + field + "'");
    }
}

std::string format_real(double x) {
    if (x == static_cast<double>(static_cast<std::int64_t>(x)) && std::abs(x) < 1e15) {
        return std::to_string(static_cast<std::int64_t>(x));
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot write '" + path + "'");
    out << contents;
}

} // namespace fluhgam
