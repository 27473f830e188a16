#include "tsagent/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace tsa {

using nlohmann::json;

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw ContractError("cannot create output directory '" + path + "': " + ec.message());
}

json metrics_json(Task task, const EvalResult& eval) {
    json m;
    m["task"] = task_name(task);
    m["windows"] = eval.windows;
    m["fallback_rate"] = eval.fallback_rate;
    switch (task) {
        case Task::Forecast:
            m["mse"] = eval.mse;
            m["mae"] = eval.mae;
            break;
        case Task::Impute:
            m["mse"] = eval.mse;
            m["mae"] = eval.mae;
            m["mask_cells"] = eval.mask_cells;
            break;
        case Task::Classify:
            m["accuracy"] = eval.accuracy;
            break;
        case Task::Detect:
            m["precision"] = eval.anomaly.precision;
            m["recall"] = eval.anomaly.recall;
            m["f1"] = eval.anomaly.f1;
            m["raw_precision"] = eval.anomaly.raw_precision;
            m["raw_recall"] = eval.anomaly.raw_recall;
            m["raw_f1"] = eval.anomaly.raw_f1;
            m["point_adjust"] = true;
            m["threshold"] = eval.best_threshold;
            break;
    }
    return m;
}

json history_json(const TrainHistory& history) {
    json h;
    h["best_epoch"] = history.best_epoch;
    h["best_val"] = history.best_val;
    h["early_stopped"] = history.early_stopped;
    json rows = json::array();
    for (const auto& e : history.epochs)
        rows.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_score", e.val_score},
                        {"lr", e.lr}});
    h["epochs"] = rows;
    return h;
}

void write_report(const std::string& out_dir, const RunReport& report) {
    ensure_dir(out_dir);
    {
        std::ofstream os(out_dir + "/config.json");
        os << report.config_snapshot.dump(2) << "\n";
    }
    {
        std::ofstream os(out_dir + "/metrics.json");
        os << report.metrics.dump(2) << "\n";
    }
    {
        json full;
        full["config"] = report.config_snapshot;
        full["metrics"] = report.metrics;
        full["traces"] = report.traces;
        full["artifacts"] = report.artifact_paths;
        std::ofstream os(out_dir + "/report.json");
        os << full.dump(2) << "\n";
    }
    {
        std::ofstream os(out_dir + "/summary.txt");
        os << report.summary_text;
    }
}

} // namespace tsa
