#pragma once

// Writes a report directory: report.json, metrics.csv, cv.csv, runtime.csv
// and chart.svg. Empty tables are still written (header only) so the file set
// is fixed; absent sections are simply missing from their rows.

#include <filesystem>
#include <string>
#include <vector>

#include "magic_meter/harness/report.hpp"
#include "magic_meter/harness/svg.hpp"

namespace magic_meter {

inline std::vector<std::string> emit_report(const Report& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    auto put = [&](const char* name, const std::string& text) {
        const auto path = (dir / name).string();
        write_file(path, text);
        written.push_back(path);
    };
    put("report.json", report_to_json(r).dump(2) + "\n");
    put("metrics.csv", metrics_csv(r));
    put("cv.csv", cv_csv(r));
    put("runtime.csv", runtime_csv(r));
    const auto title = r.name + " (" + r.model + ", " + r.split + ")";
    put("chart.svg", r.kind == "runtime" ? runtime_chart_svg(r) : mse_chart_svg({r}, title));
    return written;
}

inline Report load_report(const std::string& path) {
    try {
        return report_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("cannot parse report " + path + ": " + e.what());
    }
}

}  // namespace magic_meter
