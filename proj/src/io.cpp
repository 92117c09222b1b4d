#include "riskmfg/io.hpp"

#include <cstdio>
#include <sstream>

#include "riskmfg/errors.hpp"

namespace riskmfg {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path), path_(path) {
    if (!out_) throw ConfigError("cannot open " + path + " for writing");
    row(header);
}

void CsvWriter::row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out_ << ',';
        out_ << format_double(v);
        first = false;
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw ConfigError("write failed: " + path_);
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t expected_columns) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::vector<std::vector<double>> cols(expected_columns);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) continue;  // header
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= expected_columns) throw ConfigError(path + ":" + std::to_string(lineno) + ": too many columns");
            try {
                std::size_t used = 0;
                cols[c].push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": not a number: " + cell);
            }
            ++c;
        }
        if (c != expected_columns) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                                                     std::to_string(expected_columns) + " columns");
    }
    return cols;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace riskmfg
