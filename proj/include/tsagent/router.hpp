#ifndef TSAGENT_ROUTER_HPP
#define TSAGENT_ROUTER_HPP

#include "tsagent/memory.hpp"
#include "tsagent/tool.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tsa {

// One candidate composition: 1-3 core tools plus shared pre/post operators
// (the pre/post operators do not count toward the chain length).
struct ChainSpec {
    std::string chain_id;
    std::vector<std::string> pre;
    std::vector<std::string> tools;
    std::vector<std::string> post;

    std::vector<std::string> full() const;
};

// Per-task candidate chains, schema-checked against the tool registry at
// construction; invalid compositions never reach run time.
class ChainRegistry {
public:
    ChainRegistry(Task task, const ToolRegistry& tools, std::vector<ChainSpec> chains);
    static ChainRegistry defaults(Task task, const ToolRegistry& tools, bool tools_enabled = true);

    Task task() const { return task_; }
    const std::vector<ChainSpec>& chains() const { return chains_; }
    std::size_t size() const { return chains_.size(); }

private:
    Task task_;
    std::vector<ChainSpec> chains_;
};

enum class RoutingMode { Greedy, Ensemble };

struct RoutingDecision {
    std::vector<double> scores;         // raw logits from the controller
    std::vector<double> probabilities;  // softmax, sums to 1
    RoutingMode mode = RoutingMode::Greedy;
    int ensemble_k = 1;
    std::vector<int> selected;             // chain indices, best first
    std::vector<double> ensemble_weights;  // softmax over selected logits
};

struct RouterConfig {
    double greedy_threshold = 0.6;
    int max_ensemble = 3;
    int hidden = 32;
};

// Gated controller g_psi: two-layer perceptron over
// [one-hot task ; prior features ; mean-pooled memory] with a zero-initialized
// per-task output head (fresh routers start uniform).
class Router {
public:
    Router(ParamStore& ps, const RouterConfig& cfg, int d_m, int n_chains, Rng& rng);

    // Differentiable logits over the candidate chains.
    Tensor score_logits(Task task, const PriorBundle& priors, const SharedMemory& memory,
                        double anchor_confidence) const;
    RoutingDecision score_chains(Task task, const PriorBundle& priors, const SharedMemory& memory,
                                 double anchor_confidence) const;
    RoutingDecision decision_from_logits(const std::vector<double>& logits) const;

    const RouterConfig& config() const { return cfg_; }

private:
    RouterConfig cfg_;
    int d_m_;
    int n_chains_;
    LinearLayer l1_, l2_;
};

// -- chain execution -----------------------------------------------------------

struct ChainStepTrace {
    std::string tool_id;
    double millis = 0.0;
    std::string note;
};

struct ChainRun {
    std::string chain_id;
    std::optional<ToolValue> output;   // empty on abort
    std::string error;                 // abort reason
    std::vector<ChainStepTrace> steps;
};

// Applies the chain left to right; a NumericError aborts the run with the
// failing tool named in the trace. The pending decomposition trend is
// re-added right after the first horizon-kind output.
ChainRun run_chain(const ToolRegistry& tools, const ChainSpec& chain, const ToolValue& input,
                   ToolContext& ctx);

// Softmax-weighted combination of same-shaped raw predictions.
ToolValue ensemble(const std::vector<ToolValue>& results, const std::vector<double>& scores);

// -- verification ----------------------------------------------------------------

struct VerifiedPrediction {
    Tensor value;
    ValueKind kind = ValueKind::Horizon;
    std::vector<std::string> corrections;
    bool fallback_used = false;
    std::vector<ChainStepTrace> chain_trace;
};

struct VerifierConfig {
    double bound_sigma = 3.0;     // anchor envelope half-width in history stds
    double margin_factor = 1.0;   // soft-shoulder width in history stds
};

// Total post-processor: shape coercion (truncate / pad-by-repeat), one
// recompute on non-finite values then fallback, soft anchor-bound projection
// for continuous tasks, non-negativity for anomaly scores. Never throws;
// idempotent on its own outputs.
VerifiedPrediction verify(std::optional<ToolValue> candidate, Task task, const AnchorSet& anchors,
                          const PriorBundle& priors, const TimeSeriesWindow& window,
                          const std::function<std::optional<ToolValue>()>& recompute = nullptr,
                          const VerifierConfig& cfg = {});

} // namespace tsa

#endif // TSAGENT_ROUTER_HPP
