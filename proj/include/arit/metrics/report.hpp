#pragma once

#include <map>
#include <string>
#include <vector>

#include "arit/common/error.hpp"

namespace arit::metrics {

// Scalars plus optional per-item arrays, serialized as JSON (everything) and
// CSV (per-item rows only).
struct MetricReport {
    std::map<std::string, double> scalars;
    std::map<std::string, std::vector<double>> per_item;
    std::map<std::string, std::string> metadata; // dataset ids, config hash, seed, ...

    void validate() const; // every scalar finite, arrays equal length
};

void write_report_json(const std::string& path, const MetricReport& report);
void write_report_csv(const std::string& path, const MetricReport& report);
MetricReport read_report_json(const std::string& path);

} // namespace arit::metrics
