#ifndef TSAGENT_TOOLS_FORECAST_HPP
#define TSAGENT_TOOLS_FORECAST_HPP

#include "tsagent/tool.hpp"

namespace tsa {

// Instance normalization over observed entries; keeps the statistics in the
// context for exact inversion after the core tool.
class RevInTool : public ToolBase {
public:
    RevInTool() : ToolBase("revin", {ValueKind::Series, ValueKind::Series}, {Task::Forecast}) {}
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;
};

class RevInInverseTool : public ToolBase {
public:
    RevInInverseTool()
        : ToolBase("revin_inverse", {ValueKind::Horizon, ValueKind::Horizon}, {Task::Forecast}) {}
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;
};

// Moving-average trend split; passes the seasonal part on and parks the
// extrapolated trend in the context for re-addition after the core tool.
class DecompositionTool : public ToolBase {
public:
    explicit DecompositionTool(const ToolBuildConfig& cfg)
        : ToolBase("decomposition", {ValueKind::Series, ValueKind::Series}, {Task::Forecast}),
          kernel_(cfg.decomposition_kernel),
          horizon_(cfg.horizon) {}
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

    // trend + seasonal == x exactly; kernel must be odd and <= L.
    static std::pair<Tensor, Tensor> decompose(const Tensor& series, int kernel);

private:
    int kernel_;
    int horizon_;
};

// Channel-independent patch transformer over a normalized series; the head is
// zero-initialized and a learned projection of the fused representation's
// horizon rows is added as a residual.
class PatchTransformerForecast : public ToolBase {
public:
    PatchTransformerForecast(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    ToolBuildConfig cfg_;
    PatchEmbed embed_;
    TransformerEncoder encoder_;
    FlattenHead head_;
    LinearLayer z_resid_;  // d_model_fused -> channels, zero-init
};

// Rule-based least-squares line extension per channel.
class LinearTrendForecast : public ToolBase {
public:
    explicit LinearTrendForecast(const ToolBuildConfig& cfg)
        : ToolBase("linear_trend_forecast", {ValueKind::Series, ValueKind::Horizon}, {Task::Forecast}),
          horizon_(cfg.horizon) {}
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    int horizon_;
};

// Conservative fallback: repeats the last observed value per channel.
class RepeatLastForecast : public ToolBase {
public:
    explicit RepeatLastForecast(const ToolBuildConfig& cfg)
        : ToolBase("repeat_last_forecast", {ValueKind::Series, ValueKind::Horizon}, {Task::Forecast}),
          horizon_(cfg.horizon) {}
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    int horizon_;
};

// Ablation head (enable_tools = false): per-row projection of Z horizon rows.
class SimpleMlpForecast : public ToolBase {
public:
    SimpleMlpForecast(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    ToolBuildConfig cfg_;
    LinearLayer l1_, l2_;
};

} // namespace tsa

#endif // TSAGENT_TOOLS_FORECAST_HPP
