#ifndef TSAGENT_TOOLS_CLASSIFY_HPP
#define TSAGENT_TOOLS_CLASSIFY_HPP

#include "tsagent/tool.hpp"

namespace tsa {

// Period-folding classifier: conv embedding, FFT period detection (detached),
// 2-D fold with inception convolutions, amplitude-weighted aggregation,
// padding mask, full-sequence projection to class logits.
class TimesBlockClassify : public ToolBase {
public:
    TimesBlockClassify(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

    // Dominant periods the first block would fold on (test hook).
    std::vector<int> detect_periods(const Tensor& features) const;

private:
    struct Block {
        Tensor w1, b1;  // 1x1
        Tensor w3, b3;  // 3x3
        Tensor w5, b5;  // 5x5
    };

    ToolBuildConfig cfg_;
    Tensor embed_w_, embed_b_;  // conv1d embedding D -> d
    std::vector<Block> blocks_;
    LinearLayer head_;
    LinearLayer z_resid_;

    Tensor run_block(const Block& blk, const Tensor& x) const;  // x: [L x d]
};

// Dilated causal convolution stack with a global-average-pool head; dilation
// doubles per layer, kernel 3.
class TcnClassify : public ToolBase {
public:
    TcnClassify(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

    // Pre-pool features, exposed for the causality test.
    Tensor features(const Tensor& series) const;
    static int receptive_field(int n_layers) { return 1 + 2 * ((1 << n_layers) - 1); }

private:
    ToolBuildConfig cfg_;
    std::vector<Tensor> ws_, bs_;
    LinearLayer head_;
    LinearLayer z_resid_;
};

// Ablation head: mean-pooled fused representation to logits.
class SimpleMlpClassify : public ToolBase {
public:
    SimpleMlpClassify(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng);
    bool trainable() const override { return true; }
    ToolValue run(const ToolValue& in, ToolContext& ctx) override;

private:
    LinearLayer l1_, l2_;
};

} // namespace tsa

#endif // TSAGENT_TOOLS_CLASSIFY_HPP
