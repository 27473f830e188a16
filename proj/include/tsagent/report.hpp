#ifndef TSAGENT_REPORT_HPP
#define TSAGENT_REPORT_HPP

#include "tsagent/config.hpp"
#include "tsagent/training.hpp"

#include <json.hpp>

#include <string>

namespace tsa {

// Everything a run emits. metrics.json is fully deterministic (no wall-clock
// content); report.json additionally carries timings and traces.
struct RunReport {
    nlohmann::json config_snapshot;
    nlohmann::json metrics;     // deterministic
    nlohmann::json traces;      // chain traces, anchor stats, timings
    std::string summary_text;
    std::vector<std::string> artifact_paths;
};

nlohmann::json metrics_json(Task task, const EvalResult& eval);
nlohmann::json history_json(const TrainHistory& history);

// Writes config.json / metrics.json / report.json / summary.txt (+ any
// registered artifacts are expected to exist already).
void write_report(const std::string& out_dir, const RunReport& report);

void ensure_dir(const std::string& path);

} // namespace tsa

#endif // TSAGENT_REPORT_HPP
