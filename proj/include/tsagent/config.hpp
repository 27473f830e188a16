#ifndef TSAGENT_CONFIG_HPP
#define TSAGENT_CONFIG_HPP

#include "tsagent/pipeline.hpp"
#include "tsagent/training.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace tsa {

struct SyntheticSpec {
    std::string kind = "sine_plus_trend";
    int length = 480;
    int channels = 1;
    double period = 12.0;
    double amplitude = 1.0;
    double trend = 0.02;
    double noise = 0.0;
    double level = 5.0;
    int spike_every = 0;          // detect: one spike every N steps
    int spike_from = 0;           // detect: rows before this stay clean
    int n_windows = 64;           // classify: windows per class
};

// Full run configuration; every module config hangs off this document.
// Unknown keys are rejected with the offending path named.
struct RunConfig {
    Task task = Task::Forecast;
    std::uint64_t seed = 0;
    std::string output_dir = "runs/out";
    int workers = 1;

    // data
    std::string source = "synthetic";   // "synthetic" | "file"
    std::string path;
    SyntheticSpec synthetic;
    int seq_len = 96;
    int pred_len = 96;
    double mask_ratio = 0.25;
    SplitRatios split;
    std::string normalization = "revin";

    // anchors
    AnchorSource anchor_source = AnchorSource::Offline;
    std::string endpoint_env = "TSAGENT_VLM_ENDPOINT";
    std::string api_key_env = "TSAGENT_VLM_KEY";
    std::string model_id = "Qwen3-VL-235B-Instruct";
    int vlm_timeout_ms = 30000;
    int vlm_max_retries = 3;
    int max_concurrent_requests = 4;
    AnchorLimits anchor_limits;

    // model / modules
    int d_model = 64;
    int d_memory = 64;
    int classes = 2;
    OdeConfig ode;
    PatchConfig patch;
    int e_layers = 2;
    int heads = 4;
    int d_ff = 512;
    double dropout = 0.1;
    RouterConfig router;
    VerifierConfig verifier;
    AnalyzerConfig analyzer;
    AblationFlags ablation;
    PlotConfig plot;

    TrainConfig training;
    bool training_explicit = false;  // whether the config overrode task defaults
    std::string checkpoint;          // optional checkpoint to load
    std::map<std::string, bool> tool_availability;  // registry manifest overrides
    double detect_threshold_percentile = -1.0;      // < 0: best-F1 sweep

    nlohmann::json snapshot() const;  // canonical echo of the effective config
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

// Engine configuration derived from the run config and the prepared data.
EngineConfig engine_config_from(const RunConfig& cfg, int channels, int classes);

// Materialized dataset for a run.
struct PreparedData {
    std::vector<TimeSeriesWindow> windows;
    SplitIndices split;
    int channels = 1;
    int classes = 2;
};

PreparedData prepare_data(const RunConfig& cfg);

} // namespace tsa

#endif // TSAGENT_CONFIG_HPP
