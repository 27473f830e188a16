#include "tsagent/tools_classify.hpp"

#include "tsagent/signal.hpp"

#include <cmath>

namespace tsa {

TimesBlockClassify::TimesBlockClassify(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("timesblock_classify", {ValueKind::Series, ValueKind::Logits}, {Task::Classify}),
      cfg_(cfg),
      head_(ps, "classify.tb.head", cfg.seq_len * cfg.timesblock_d, cfg.classes, rng) {
    int d = cfg.timesblock_d;
    double es = 1.0 / std::sqrt(static_cast<double>(3 * cfg.channels));
    embed_w_ = ps.create("classify.tb.embed.w", {d, cfg.channels, 3}, rng, es);
    embed_b_ = ps.create_const("classify.tb.embed.b", {d}, 0.0);
    for (int l = 0; l < cfg.timesblock_layers; ++l) {
        Block blk;
        std::string p = "classify.tb.block" + std::to_string(l);
        double s1 = 1.0 / std::sqrt(static_cast<double>(d));
        double s3 = 1.0 / std::sqrt(static_cast<double>(9 * d));
        double s5 = 1.0 / std::sqrt(static_cast<double>(25 * d));
        blk.w1 = ps.create(p + ".w1", {d, d, 1, 1}, rng, s1);
        blk.b1 = ps.create_const(p + ".b1", {d}, 0.0);
        blk.w3 = ps.create(p + ".w3", {d, d, 3, 3}, rng, s3);
        blk.b3 = ps.create_const(p + ".b3", {d}, 0.0);
        blk.w5 = ps.create(p + ".w5", {d, d, 5, 5}, rng, s5);
        blk.b5 = ps.create_const(p + ".b5", {d}, 0.0);
        blocks_.push_back(std::move(blk));
    }
    z_resid_.w = ps.create_const("classify.tb.zres.w", {cfg.d_model_fused, cfg.classes}, 0.0);
    z_resid_.b = ps.create_const("classify.tb.zres.b", {cfg.classes}, 0.0);
}

std::vector<int> TimesBlockClassify::detect_periods(const Tensor& features) const {
    // Mean over embedding dims, detached; FFT output is never differentiated.
    int L = features.shape()[0], d = features.shape()[1];
    std::vector<double> series(static_cast<std::size_t>(L), 0.0);
    for (int t = 0; t < L; ++t) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += features.data()[static_cast<std::size_t>(t) * d + j];
        series[static_cast<std::size_t>(t)] = acc / d;
    }
    auto periods = signal::topk_periods(series, cfg_.timesblock_topk);
    std::vector<int> out;
    for (const auto& p : periods) out.push_back(p.period);
    if (out.empty()) out.push_back(std::max(2, L / 2));
    return out;
}

Tensor TimesBlockClassify::run_block(const Block& blk, const Tensor& x) const {
    int L = x.shape()[0], d = x.shape()[1];
    std::vector<double> series(static_cast<std::size_t>(L), 0.0);
    for (int t = 0; t < L; ++t) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += x.data()[static_cast<std::size_t>(t) * d + j];
        series[static_cast<std::size_t>(t)] = acc / d;
    }
    auto periods = signal::topk_periods(series, cfg_.timesblock_topk);
    if (periods.empty()) periods.push_back({std::max(2, L / 2), 1.0, 1});

    // Softmax weights over the detected-period amplitudes (detached constants).
    double mx = periods[0].strength;
    for (const auto& p : periods) mx = std::max(mx, p.strength);
    double z = 0.0;
    std::vector<double> w;
    for (const auto& p : periods) {
        w.push_back(std::exp(p.strength - mx));
        z += w.back();
    }
    for (auto& v : w) v /= z;

    Tensor agg = Tensor::zeros({L, d});
    for (std::size_t k = 0; k < periods.size(); ++k) {
        int period = periods[k].period;
        int rows = (L + period - 1) / period;
        int padded = rows * period;
        Tensor xp = x;
        if (padded > L) xp = concat({x, Tensor::zeros({padded - L, d})}, 0);
        Tensor grid = reshape(xp, {rows, period, d});
        Tensor c1 = conv2d(grid, blk.w1, blk.b1);
        Tensor c3 = conv2d(grid, blk.w3, blk.b3);
        Tensor c5 = conv2d(grid, blk.w5, blk.b5);
        Tensor mixed = gelu(mul(add(add(c1, c3), c5), Tensor::scalar(1.0 / 3.0)));
        Tensor flat = reshape(mixed, {padded, d});
        Tensor cropped = padded > L ? slice(flat, 0, 0, L) : flat;
        agg = add(agg, mul(Tensor::scalar(w[k]), cropped));
    }
    return add(x, agg);  // residual
}

ToolValue TimesBlockClassify::run(const ToolValue& in, ToolContext& ctx) {
    int L = in.tensor.shape()[0];
    if (L < 4) throw ContractError("timesblock_classify requires L >= 4");
    Tensor x = conv1d(in.tensor, embed_w_, embed_b_);
    x = add(x, positional_encoding(L, cfg_.timesblock_d));
    for (const auto& blk : blocks_) x = run_block(blk, x);

    // Padding mask: windows here are full-length, so the valid-step mask is
    // all ones; masked (missing) steps are zeroed before flattening.
    if (ctx.window && ctx.window->mask) {
        std::vector<double> m(static_cast<std::size_t>(L), 1.0);
        for (int t = 0; t < L; ++t) {
            bool all_missing = true;
            for (int d = 0; d < ctx.window->channels(); ++d)
                all_missing = all_missing && ctx.window->is_masked(t, d);
            if (all_missing) m[static_cast<std::size_t>(t)] = 0.0;
        }
        x = mul(x, Tensor::from({L, 1}, m));
    }

    Tensor logits = head_.forward(reshape(x, {1, L * cfg_.timesblock_d}));
    if (ctx.fused.defined()) logits = add(logits, z_resid_.forward(mean(slice(ctx.fused, 0, 0, L), 0)));
    return {ValueKind::Logits, logits, std::nullopt, std::nullopt};
}

TcnClassify::TcnClassify(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("tcn_classify", {ValueKind::Series, ValueKind::Logits}, {Task::Classify}),
      cfg_(cfg),
      head_(ps, "classify.tcn.head", cfg.tcn_channels, cfg.classes, rng) {
    int ch = cfg.tcn_channels;
    for (int l = 0; l < cfg.tcn_layers; ++l) {
        int cin = l == 0 ? cfg.channels : ch;
        double s = 1.0 / std::sqrt(static_cast<double>(3 * cin));
        ws_.push_back(ps.create("classify.tcn.w" + std::to_string(l), {ch, cin, 3}, rng, s));
        bs_.push_back(ps.create_const("classify.tcn.b" + std::to_string(l), {ch}, 0.0));
    }
    z_resid_.w = ps.create_const("classify.tcn.zres.w", {cfg.d_model_fused, cfg.classes}, 0.0);
    z_resid_.b = ps.create_const("classify.tcn.zres.b", {cfg.classes}, 0.0);
}

Tensor TcnClassify::features(const Tensor& series) const {
    Tensor x = series;
    for (std::size_t l = 0; l < ws_.size(); ++l) {
        int dilation = 1 << l;
        Tensor y = relu(conv1d(x, ws_[l], bs_[l], dilation, Pad1d::Causal));
        x = (l == 0) ? y : add(x, y);  // residual once widths match
    }
    return x;
}

ToolValue TcnClassify::run(const ToolValue& in, ToolContext& ctx) {
    Tensor feats = features(in.tensor);
    Tensor pooled = mean(feats, 0);  // [1 x ch]
    Tensor logits = head_.forward(pooled);
    if (ctx.fused.defined())
        logits = add(logits, z_resid_.forward(mean(slice(ctx.fused, 0, 0, in.tensor.shape()[0]), 0)));
    return {ValueKind::Logits, logits, std::nullopt, std::nullopt};
}

SimpleMlpClassify::SimpleMlpClassify(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("simple_mlp_classify", {ValueKind::Series, ValueKind::Logits}, {Task::Classify}),
      l1_(ps, "classify.mlp.l1", cfg.d_model_fused, cfg.d_model_fused, rng),
      l2_(ps, "classify.mlp.l2", cfg.d_model_fused, cfg.classes, rng) {}

ToolValue SimpleMlpClassify::run(const ToolValue& in, ToolContext& ctx) {
    if (!ctx.fused.defined()) throw ContractError("simple_mlp_classify needs the fused representation");
    Tensor pooled = mean(slice(ctx.fused, 0, 0, in.tensor.shape()[0]), 0);
    return {ValueKind::Logits, l2_.forward(gelu(l1_.forward(pooled))), std::nullopt, std::nullopt};
}

} // namespace tsa
