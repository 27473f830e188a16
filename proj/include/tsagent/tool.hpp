#ifndef TSAGENT_TOOL_HPP
#define TSAGENT_TOOL_HPP

#include "tsagent/anchors.hpp"
#include "tsagent/latent_ode.hpp"
#include "tsagent/tools_blocks.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tsa {

// Shape family flowing between chained tools.
enum class ValueKind { Series, Horizon, Logits, Scores };

const char* value_kind_name(ValueKind k);
ValueKind required_output_kind(Task task);

struct ToolValue {
    ValueKind kind = ValueKind::Series;
    Tensor tensor;                      // Series/Horizon: [T x D]; Logits: [1 x C]; Scores: [L x 1]
    std::optional<Tensor> attention;    // per-step weights for Scores
    std::optional<Tensor> objective;    // scalar training surrogate (reconstruction-style tools)
};

// Auxiliary context every tool receives alongside the predecessor output.
struct ToolContext {
    const TimeSeriesWindow* window = nullptr;
    const PriorBundle* priors = nullptr;
    const AnchorSet* anchors = nullptr;
    Tensor fused;                        // Z, (L+H) x d_model; may be undefined
    std::optional<NormState> norm_state; // written by revin, read by revin_inverse
    std::optional<Tensor> pending_trend; // written by decomposition, re-added after the core tool
    bool training = false;
    std::uint64_t drop_seed = 0;
    std::vector<std::string> notes;
};

struct ToolSchema {
    ValueKind input = ValueKind::Series;
    ValueKind output = ValueKind::Series;
};

class Tool {
public:
    virtual ~Tool() = default;
    virtual const std::string& id() const = 0;
    virtual ToolSchema schema() const = 0;
    virtual std::set<Task> task_compat() const = 0;
    virtual bool available() const { return true; }
    virtual bool trainable() const { return false; }
    virtual ToolValue run(const ToolValue& in, ToolContext& ctx) = 0;
};

// Base with the common bookkeeping.
class ToolBase : public Tool {
public:
    ToolBase(std::string id, ToolSchema schema, std::set<Task> tasks)
        : id_(std::move(id)), schema_(schema), tasks_(std::move(tasks)) {}
    const std::string& id() const override { return id_; }
    ToolSchema schema() const override { return schema_; }
    std::set<Task> task_compat() const override { return tasks_; }

private:
    std::string id_;
    ToolSchema schema_;
    std::set<Task> tasks_;
};

// Placeholder for tools named in the registry without an algorithm; the
// router must never select these.
class UnavailableTool : public ToolBase {
public:
    UnavailableTool(std::string id, std::set<Task> tasks)
        : ToolBase(std::move(id), {ValueKind::Series, ValueKind::Series}, std::move(tasks)) {}
    bool available() const override { return false; }
    ToolValue run(const ToolValue&, ToolContext&) override {
        throw RegistryError("tool '" + id() + "' is registered but unavailable");
    }
};

struct ToolBuildConfig {
    int seq_len = 96;
    int horizon = 96;
    int channels = 7;
    int classes = 2;
    PatchConfig patch;     // 16 / 8 / 64
    int d_model_fused = 64;
    int e_layers = 2;
    int heads = 4;
    int d_ff = 512;
    double dropout = 0.1;
    int timesblock_topk = 3;
    int timesblock_layers = 2;
    int timesblock_d = 32;
    int tcn_layers = 4;
    int tcn_channels = 32;
    int anomaly_d = 32;
    int vae_latent = 16;
    int vae_hidden = 64;
    double vae_beta = 1.0;
    int decomposition_kernel = 25;
};

class ToolRegistry {
public:
    void add(std::shared_ptr<Tool> tool);
    bool has(const std::string& id) const { return tools_.count(id) > 0; }
    std::shared_ptr<Tool> get(const std::string& id) const;
    std::vector<std::string> ids() const;

    // Schema conformance + availability check for a composition; throws
    // RegistryError so invalid chains never reach run time.
    void validate_chain(const std::vector<std::string>& tool_ids, Task task) const;

    // Run-config manifest support: availability overrides and the declarative
    // registry dump (tool_id, task_compat, availability, trainability).
    void apply_availability(const std::map<std::string, bool>& overrides);
    nlohmann::json manifest() const;

private:
    std::map<std::string, std::shared_ptr<Tool>> tools_;
};

// Builds the task's tool set (plus shared pre/post operators). Unavailable
// registry entries are included so routing can prove it never picks them.
ToolRegistry build_registry(ParamStore& ps, const ToolBuildConfig& cfg, Task task, Rng& rng);

// Availability override from the run config's registry manifest.
class AvailabilityOverride : public Tool {
public:
    AvailabilityOverride(std::shared_ptr<Tool> inner, bool available)
        : inner_(std::move(inner)), available_(available) {}
    const std::string& id() const override { return inner_->id(); }
    ToolSchema schema() const override { return inner_->schema(); }
    std::set<Task> task_compat() const override { return inner_->task_compat(); }
    bool available() const override { return available_ && inner_->available(); }
    bool trainable() const override { return inner_->trainable(); }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override {
        if (!available()) throw RegistryError("tool '" + id() + "' is disabled by the manifest");
        return inner_->run(in, ctx);
    }

private:
    std::shared_ptr<Tool> inner_;
    bool available_;
};

} // namespace tsa

#endif // TSAGENT_TOOL_HPP
