#include "jtprobe/scan.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace jt {

void ScanResult::add_meta(const std::string& key, const std::string& value) {
    metadata.emplace_back(key, value);
}

void ScanResult::add_meta(const std::string& key, double value) {
    metadata.emplace_back(key, format_double(value));
}

void ScanResult::add_row(std::vector<double> row) {
    if (!columns.empty() && row.size() != columns.size())
        throw std::invalid_argument("ScanResult: row width does not match columns");
    rows.push_back(std::move(row));
}

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string to_csv(const ScanResult& result) {
    std::string out;
    for (const auto& [k, v] : result.metadata)
        out += "# " + k + " = " + v + "\n";
    out += "# converged = ";
    out += result.converged ? "1" : "0";
    out += "\n";
    for (size_t i = 0; i < result.columns.size(); ++i) {
        if (i) out += ",";
        out += result.columns[i];
    }
    out += "\n";
    for (const auto& row : result.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += format_double(row[i]);
        }
        out += "\n";
    }
    return out;
}

void write_csv(const ScanResult& result, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    f << to_csv(result);
    if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace jt
