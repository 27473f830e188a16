#include "tsagent/tool.hpp"

#include "tsagent/tools_anomaly.hpp"
#include "tsagent/tools_classify.hpp"
#include "tsagent/tools_forecast.hpp"
#include "tsagent/tools_impute.hpp"

#include <json.hpp>

namespace tsa {

const char* value_kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::Series: return "series";
        case ValueKind::Horizon: return "horizon";
        case ValueKind::Logits: return "logits";
        case ValueKind::Scores: return "scores";
    }
    return "?";
}

ValueKind required_output_kind(Task task) {
    switch (task) {
        case Task::Forecast: return ValueKind::Horizon;
        case Task::Classify: return ValueKind::Logits;
        case Task::Impute: return ValueKind::Series;
        case Task::Detect: return ValueKind::Scores;
    }
    return ValueKind::Series;
}

void ToolRegistry::add(std::shared_ptr<Tool> tool) {
    if (tools_.count(tool->id())) throw RegistryError("duplicate tool id '" + tool->id() + "'");
    tools_[tool->id()] = std::move(tool);
}

std::shared_ptr<Tool> ToolRegistry::get(const std::string& id) const {
    auto it = tools_.find(id);
    if (it == tools_.end()) throw RegistryError("unknown tool '" + id + "'");
    return it->second;
}

std::vector<std::string> ToolRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : tools_) out.push_back(id);
    return out;
}

void ToolRegistry::validate_chain(const std::vector<std::string>& tool_ids, Task task) const {
    if (tool_ids.empty()) throw RegistryError("empty tool chain");
    ValueKind kind = ValueKind::Series;
    for (const auto& id : tool_ids) {
        auto tool = get(id);
        if (!tool->available()) throw RegistryError("chain uses unavailable tool '" + id + "'");
        if (!tool->task_compat().count(task))
            throw RegistryError("tool '" + id + "' is not compatible with task " + task_name(task));
        if (tool->schema().input != kind)
            throw RegistryError("schema mismatch at '" + id + "': expects " +
                                value_kind_name(tool->schema().input) + ", gets " + value_kind_name(kind));
        kind = tool->schema().output;
    }
    if (kind != required_output_kind(task))
        throw RegistryError("chain output kind " + std::string(value_kind_name(kind)) +
                            " does not match task " + task_name(task));
}

void ToolRegistry::apply_availability(const std::map<std::string, bool>& overrides) {
    for (const auto& [id, avail] : overrides) {
        auto it = tools_.find(id);
        if (it == tools_.end()) throw ConfigError("tool manifest names unknown tool '" + id + "'");
        it->second = std::make_shared<AvailabilityOverride>(it->second, avail);
    }
}

nlohmann::json ToolRegistry::manifest() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [id, tool] : tools_) {
        nlohmann::json tasks = nlohmann::json::array();
        for (Task t : tool->task_compat()) tasks.push_back(task_name(t));
        arr.push_back({{"tool_id", id},
                       {"task_compat", tasks},
                       {"available", tool->available()},
                       {"trainable", tool->trainable()}});
    }
    return arr;
}

ToolRegistry build_registry(ParamStore& ps, const ToolBuildConfig& cfg, Task task, Rng& rng) {
    ToolRegistry reg;
    switch (task) {
        case Task::Forecast:
            reg.add(std::make_shared<RevInTool>());
            reg.add(std::make_shared<RevInInverseTool>());
            reg.add(std::make_shared<DecompositionTool>(cfg));
            reg.add(std::make_shared<PatchTransformerForecast>(ps, cfg, rng));
            reg.add(std::make_shared<LinearTrendForecast>(cfg));
            reg.add(std::make_shared<RepeatLastForecast>(cfg));
            reg.add(std::make_shared<SimpleMlpForecast>(ps, cfg, rng));
            reg.add(std::make_shared<UnavailableTool>("nbeats", std::set<Task>{Task::Forecast}));
            break;
        case Task::Classify:
            reg.add(std::make_shared<TimesBlockClassify>(ps, cfg, rng));
            reg.add(std::make_shared<TcnClassify>(ps, cfg, rng));
            reg.add(std::make_shared<SimpleMlpClassify>(ps, cfg, rng));
            reg.add(std::make_shared<UnavailableTool>("inception_time", std::set<Task>{Task::Classify}));
            break;
        case Task::Impute:
            reg.add(std::make_shared<PatchTransformerImpute>(ps, cfg, rng));
            reg.add(std::make_shared<LinearInterpImpute>());
            reg.add(std::make_shared<SimpleMlpImpute>(ps, cfg, rng));
            reg.add(std::make_shared<UnavailableTool>("saits", std::set<Task>{Task::Impute}));
            reg.add(std::make_shared<UnavailableTool>("brits", std::set<Task>{Task::Impute}));
            break;
        case Task::Detect:
            reg.add(std::make_shared<MultiScaleAnomaly>(ps, cfg, rng));
            reg.add(std::make_shared<VaeAnomaly>(ps, cfg, rng));
            reg.add(std::make_shared<ZScoreAnomaly>());
            reg.add(std::make_shared<SimpleMlpAnomaly>(ps, cfg, rng));
            reg.add(std::make_shared<UnavailableTool>("logtrans", std::set<Task>{Task::Detect}));
            break;
    }
    return reg;
}

} // namespace tsa
