#ifndef TSAGENT_TOOLS_IMPUTE_HPP
#define TSAGENT_TOOLS_IMPUTE_HPP

#include "tsagent/tool.hpp"

namespace tsa {

// Patch-transformer reconstruction over the masked window: zero missing
// cells, normalize over observed entries, encode, reconstruct the full
// length, denormalize, then merge so observed cells pass through bit-exactly.
class PatchTransformerImpute : public ToolBase {
public:
    PatchTransformerImpute(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    ToolBuildConfig cfg_;
    PatchEmbed embed_;
    TransformerEncoder encoder_;
    FlattenHead recon_;    // tokens -> reconstructed length-L channel
    LinearLayer z_resid_;  // fused rows -> per-channel residual
};

// Rule-based per-channel linear interpolation across observed neighbors;
// also the verifier's imputation fallback.
class LinearInterpImpute : public ToolBase {
public:
    LinearInterpImpute()
        : ToolBase("linear_interp_impute", {ValueKind::Series, ValueKind::Series}, {Task::Impute}) {}
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

    static Matrix interpolate(const TimeSeriesWindow& window);
};

// Ablation head: per-row projection of Z, merged with observed cells.
class SimpleMlpImpute : public ToolBase {
public:
    SimpleMlpImpute(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    ToolBuildConfig cfg_;
    LinearLayer l1_, l2_;
};

// Shared merge: observed cells from the input, reconstructed cells at masked
// positions only.
Tensor merge_imputation(const Tensor& original, const Tensor& reconstruction,
                        const TimeSeriesWindow& window);

} // namespace tsa

#endif // TSAGENT_TOOLS_IMPUTE_HPP
