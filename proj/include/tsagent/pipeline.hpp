#ifndef TSAGENT_PIPELINE_HPP
#define TSAGENT_PIPELINE_HPP

#include "tsagent/anchor_parse.hpp"
#include "tsagent/memory.hpp"
#include "tsagent/oracle.hpp"
#include "tsagent/plot.hpp"
#include "tsagent/router.hpp"
#include "tsagent/vlm_client.hpp"

#include <map>
#include <unordered_map>

namespace tsa {

struct AblationFlags {
    bool enable_visual_reasoner = true;
    bool enable_numeric_reasoner = true;
    bool enable_shared_memory = true;
    bool enable_gated_attention = true;
    bool enable_tools = true;
    CompletionStrategy completion_strategy = CompletionStrategy::Ode;
};

enum class AnchorSource { Offline, Vlm };

struct EngineConfig {
    Task task = Task::Forecast;
    int seq_len = 96;
    int horizon = 96;
    int channels = 1;
    int classes = 2;
    std::uint64_t seed = 0;

    CoordinationConfig coord;     // d_m 64, d_model 64, e_layers 2, heads 4
    OdeConfig ode;                // d_h 128, step 0.05, pull 0.5, bandwidth 4
    ToolBuildConfig tools;        // patch 16/8/64, dropout 0.1
    RouterConfig router;          // greedy threshold 0.6, k <= 3
    VerifierConfig verifier;
    AnalyzerConfig analyzer;
    AnchorLimits anchor_limits;   // max 20, confidence 0.7
    AblationFlags ablation;
    double lambda_com = 0.01;

    AnchorSource anchor_source = AnchorSource::Offline;
    VlmRequest vlm;               // endpoint/model/key for the live path
    int max_concurrent_requests = 4;
    PlotConfig plot;
    std::map<std::string, bool> tool_availability;  // manifest overrides
    double detect_threshold_percentile = -1.0;      // < 0: best-F1 sweep
};

struct WindowResult {
    VerifiedPrediction prediction;
    RoutingDecision routing;
    std::string executed_chains;           // comma-joined chain ids
    AnchorSet anchors;
    bool anchors_from_oracle = true;
    std::vector<SharedMemory::UpdateLogEntry> memory_log;

    Tensor loss;                           // defined in training mode
    double task_loss = 0.0;
    double com_loss = 0.0;
};

// One Analyzer -> Reasoner -> Executor pass per window, memory confined to
// the call. Owns every learnable parameter.
class Engine {
public:
    explicit Engine(const EngineConfig& cfg);

    const EngineConfig& config() const { return cfg_; }
    ParamStore& params() { return ps_; }
    const ChainRegistry& chains() const { return chains_; }
    const ToolRegistry& tools() const { return tools_; }

    // window_id keys the per-window anchor cache (VLM queried once per window).
    WindowResult run_window(const TimeSeriesWindow& window, std::uint64_t window_id, bool training);

    AnchorSet anchors_for(const TimeSeriesWindow& window, const PriorBundle& priors,
                          std::uint64_t window_id, bool& from_oracle);
    // Fills the anchor cache so later (possibly parallel) passes only read it.
    void warm_anchor_cache(const TimeSeriesWindow& window, std::uint64_t window_id);
    // Bulk warm; VLM-backed runs fan out up to max_concurrent_requests.
    void warm_anchor_cache_bulk(const std::vector<TimeSeriesWindow>& windows,
                                const std::vector<std::size_t>& indices);
    void clear_anchor_cache() { anchor_cache_.clear(); }

private:
    EngineConfig cfg_;
    ParamStore ps_;
    Rng rng_init_;  // parameter-init stream; must precede the module members
    Coordination coord_;
    NumericReasoner numeric_;
    ToolRegistry tools_;
    ChainRegistry chains_;
    Router router_;
    struct CachedAnchors {
        AnchorSet set;
        bool from_oracle = true;
    };
    std::unordered_map<std::uint64_t, CachedAnchors> anchor_cache_;

    AnchorSet fetch_anchors(const TimeSeriesWindow& window, const PriorBundle& priors,
                            bool& from_oracle) const;
    Tensor task_loss(const VerifiedPrediction& pred, const ToolValue* raw,
                     const TimeSeriesWindow& window) const;
};

// Argmax class of a logits row.
int predicted_label(const Tensor& logits);

} // namespace tsa

#endif // TSAGENT_PIPELINE_HPP
