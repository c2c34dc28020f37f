#include "arit/metrics/report.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace arit::metrics {

void MetricReport::validate() const {
    for (const auto& [k, v] : scalars)
        if (!std::isfinite(v)) throw NumericError("report scalar '" + k + "' is not finite");
    size_t len = 0;
    bool first = true;
    for (const auto& [k, v] : per_item) {
        if (first) {
            len = v.size();
            first = false;
        } else if (v.size() != len) {
            throw DataError("report per-item arrays have differing lengths ('" + k + "')");
        }
    }
}

void write_report_json(const std::string& path, const MetricReport& report) {
    report.validate();
    nlohmann::json j;
    j["scalars"] = report.scalars;
    j["metadata"] = report.metadata;
    j["per_item"] = report.per_item;
    std::ofstream f(path);
    if (!f) throw DataError("cannot open report for writing: " + path);
    f << j.dump(2) << "\n";
}

void write_report_csv(const std::string& path, const MetricReport& report) {
    report.validate();
    std::ofstream f(path);
    if (!f) throw DataError("cannot open report for writing: " + path);
    f << "item";
    size_t len = 0;
    for (const auto& [k, v] : report.per_item) {
        f << "," << k;
        len = v.size();
    }
    f << "\n";
    for (size_t i = 0; i < len; ++i) {
        f << i;
        for (const auto& [k, v] : report.per_item) {
            (void)k;
            f << "," << v[i];
        }
        f << "\n";
    }
}

MetricReport read_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open report: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed report JSON in " + path + ": " + e.what());
    }
    MetricReport r;
    try {
        if (j.contains("scalars"))
            r.scalars = j["scalars"].get<std::map<std::string, double>>();
        if (j.contains("metadata"))
            r.metadata = j["metadata"].get<std::map<std::string, std::string>>();
        if (j.contains("per_item"))
            r.per_item = j["per_item"].get<std::map<std::string, std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("report field error in " + path + ": " + e.what());
    }
    r.validate();
    return r;
}

} // namespace arit::metrics
