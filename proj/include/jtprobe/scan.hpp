#pragma once

#include <string>
#include <utility>
#include <vector>

namespace jt {

/// Tabular result destined for CSV. Metadata embeds every resolved
/// parameter so runs are reproducible; output is byte-deterministic.
struct ScanResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;
    bool converged = true;

    void add_meta(const std::string& key, const std::string& value);
    void add_meta(const std::string& key, double value);
    void add_row(std::vector<double> row);
};

std::string format_double(double v);

/// '#'-prefixed metadata lines, one header row, then data rows
/// (RFC-4180-style, '.' decimal).
std::string to_csv(const ScanResult& result);

void write_csv(const ScanResult& result, const std::string& path);

}  // namespace jt
