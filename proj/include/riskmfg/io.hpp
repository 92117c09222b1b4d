#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskmfg {

/// Shortest text that round-trips a double.
std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(std::initializer_list<double> values);
    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::string path_;
};

/// Reads a CSV with a header row into numeric columns. Throws ConfigError on malformed input.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t expected_columns);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace riskmfg
