#pragma once

#include <string>
#include <vector>

#include "arit/cli/config.hpp"
#include "arit/metrics/report.hpp"

namespace arit::cli {

// Chart derived from a report's per-item arrays. `value_key` defaults to the
// first per-item array; bar labels default to item indices.
struct ChartSpec {
    std::string kind = "bar"; // "bar" | "scatter" | "none"
    std::string value_key;    // bar heights / scatter y
    std::string x_key;        // scatter x
    std::vector<std::string> labels;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string stamp; // drawn bottom-right when non-empty
};

// Writes out_dir/basename.{json,csv,png}. JSON is always written; csv and
// png/png-chart only when listed in formats. Unknown formats are rejected.
void emit_report(const metrics::MetricReport& report, const std::string& out_dir,
                 const std::string& basename, const std::vector<std::string>& formats,
                 const ChartSpec& chart = {});

// Entry point minus the program name; returns the process exit code.
int run(const std::vector<std::string>& args);

int run_main(int argc, char** argv);

} // namespace arit::cli
