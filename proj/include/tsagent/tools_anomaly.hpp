#ifndef TSAGENT_TOOLS_ANOMALY_HPP
#define TSAGENT_TOOLS_ANOMALY_HPP

#include "tsagent/tool.hpp"

namespace tsa {

// Two patch-reconstruction branches (fine p=4, coarse p=16) over an
// instance-normalized window with learnable affine; reconstructions are fused
// by a two-layer perceptron and scored s_t = ||x_t - x_hat_t||^2 * alpha_t
// with softmax attention over the window.
class MultiScaleAnomaly : public ToolBase {
public:
    MultiScaleAnomaly(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

    struct Reconstruction {
        Tensor recon;   // [L x D], normalized space
        Tensor hidden;  // [L x d], fusion features feeding the attention head
    };
    Reconstruction reconstruct(const Tensor& norm_series, ToolContext& ctx) const;

private:
    struct Branch {
        PatchEmbed embed;
        TransformerEncoder encoder;
        FlattenHead recon;
    };
    ToolBuildConfig cfg_;
    Tensor affine_gain_, affine_bias_;  // learnable instance-norm affine
    Branch fine_, coarse_;
    LinearLayer fuse1_, fuse2_;  // [recon4 ; recon16] -> hidden -> D
    LinearLayer attn_;           // hidden -> 1 attention score
    LinearLayer z_resid_;
};

// Variational reconstruction scorer: s = ||x - x_hat||^2 + beta * KL.
class VaeAnomaly : public ToolBase {
public:
    VaeAnomaly(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

    // 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2)
    static Tensor kl_divergence(const Tensor& mu, const Tensor& logvar);

private:
    ToolBuildConfig cfg_;
    LinearLayer enc1_, enc_mu_, enc_logvar_, dec1_, dec2_;
};

// Conservative rule-based scorer: per-step squared z magnitude.
class ZScoreAnomaly : public ToolBase {
public:
    ZScoreAnomaly() : ToolBase("zscore_anomaly", {ValueKind::Series, ValueKind::Scores}, {Task::Detect}) {}
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

    static std::vector<double> scores_for(const TimeSeriesWindow& window);
};

// Ablation head: per-row reconstruction from Z.
class SimpleMlpAnomaly : public ToolBase {
public:
    SimpleMlpAnomaly(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    ToolBuildConfig cfg_;
    LinearLayer l1_, l2_;
};

} // namespace tsa

#endif // TSAGENT_TOOLS_ANOMALY_HPP
