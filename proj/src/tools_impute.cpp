#include "tsagent/tools_impute.hpp"

#include "tsagent/signal.hpp"

#include <cmath>

namespace tsa {

Tensor merge_imputation(const Tensor& original, const Tensor& reconstruction,
                        const TimeSeriesWindow& window) {
    int L = original.shape()[0], D = original.shape()[1];
    std::vector<double> m(static_cast<std::size_t>(L) * D, 0.0);
    for (int t = 0; t < L; ++t)
        for (int d = 0; d < D; ++d)
            if (window.is_masked(t, d)) m[static_cast<std::size_t>(t) * D + d] = 1.0;
    Tensor mask = Tensor::from({L, D}, std::move(m));
    Tensor keep = sub(Tensor::scalar(1.0), mask);
    // Y = X . (1-M) + X_hat . M; observed cells are exactly X because the
    // masked-cell term is exactly zero there.
    return add(mul(original, keep), mul(reconstruction, mask));
}

PatchTransformerImpute::PatchTransformerImpute(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("patch_transformer_impute", {ValueKind::Series, ValueKind::Series}, {Task::Impute}),
      cfg_(cfg),
      embed_(ps, "impute.pt.embed", cfg.seq_len, cfg.patch, rng),
      encoder_(ps, "impute.pt.enc", cfg.e_layers, cfg.patch.d_model, cfg.heads, cfg.d_ff, cfg.dropout,
               rng),
      recon_(ps, "impute.pt.recon", patch_count(cfg.seq_len, cfg.patch), cfg.patch.d_model, cfg.seq_len,
             rng, /*zero_init=*/true) {
    z_resid_.w = ps.create_const("impute.pt.zres.w", {cfg.d_model_fused, cfg.channels}, 0.0);
    z_resid_.b = ps.create_const("impute.pt.zres.b", {cfg.channels}, 0.0);
}

ToolValue PatchTransformerImpute::run(const ToolValue& in, ToolContext& ctx) {
    const TimeSeriesWindow& w = *ctx.window;
    if (w.mask && w.masked_count() == static_cast<int>(w.values.v.size()))
        throw FullyMaskedError("imputation window is fully masked");
    int L = in.tensor.shape()[0], D = in.tensor.shape()[1];

    // Zero out missing positions, whatever the caller stored there.
    Tensor zeroed = in.tensor;
    if (w.mask) {
        std::vector<double> keep(static_cast<std::size_t>(L) * D, 1.0);
        for (int t = 0; t < L; ++t)
            for (int d = 0; d < D; ++d)
                if (w.is_masked(t, d)) keep[static_cast<std::size_t>(t) * D + d] = 0.0;
        zeroed = mul(in.tensor, Tensor::from({L, D}, std::move(keep)));
    }

    // Per-channel statistics over observed entries only.
    std::vector<double> loc(static_cast<std::size_t>(D)), scl(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        std::vector<double> obs;
        for (int t = 0; t < L; ++t)
            if (!w.is_masked(t, d)) obs.push_back(zeroed.data()[static_cast<std::size_t>(t) * D + d]);
        if (obs.empty()) throw FullyMaskedError("channel " + std::to_string(d) + " fully masked");
        loc[static_cast<std::size_t>(d)] = signal::mean_of(obs);
        scl[static_cast<std::size_t>(d)] = std::max(signal::std_of(obs), 1e-8);
    }
    std::vector<double> inv(scl.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scl[i];
    Tensor loc_row = Tensor::from({1, D}, loc);
    Tensor scale_row = Tensor::from({1, D}, scl);
    Tensor norm = mul(sub(zeroed, loc_row), Tensor::from({1, D}, inv));

    std::vector<Tensor> channels;
    channels.reserve(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        Tensor col = slice(norm, 1, d, d + 1);
        Tensor tokens = embed_.forward(col);
        Tensor enc = encoder_.forward(tokens, ctx.training, ctx.drop_seed + static_cast<std::uint64_t>(d));
        channels.push_back(transpose(recon_.forward(enc)));  // [L x 1]
    }
    Tensor recon_norm = concat(channels, 1);
    if (ctx.fused.defined()) {
        Tensor z = slice(ctx.fused, 0, 0, L);
        recon_norm = add(recon_norm, z_resid_.forward(z));
    }
    Tensor recon = add(mul(recon_norm, scale_row), loc_row);
    return {ValueKind::Series, merge_imputation(in.tensor, recon, w), std::nullopt, std::nullopt};
}

Matrix LinearInterpImpute::interpolate(const TimeSeriesWindow& window) {
    int L = window.length(), D = window.channels();
    Matrix out = window.values;
    for (int d = 0; d < D; ++d) {
        for (int t = 0; t < L; ++t) {
            if (!window.is_masked(t, d)) continue;
            int left = t - 1, right = t + 1;
            while (left >= 0 && window.is_masked(left, d)) --left;
            while (right < L && window.is_masked(right, d)) ++right;
            double v;
            if (left >= 0 && right < L) {
                double frac = static_cast<double>(t - left) / (right - left);
                v = window.values.at(left, d) * (1 - frac) + window.values.at(right, d) * frac;
            } else if (left >= 0) {
                v = window.values.at(left, d);
            } else if (right < L) {
                v = window.values.at(right, d);
            } else {
                v = 0.0;
            }
            out.at(t, d) = v;
        }
    }
    return out;
}

ToolValue LinearInterpImpute::run(const ToolValue& in, ToolContext& ctx) {
    Matrix filled = interpolate(*ctx.window);
    Tensor recon = Tensor::from({filled.rows, filled.cols}, filled.v);
    return {ValueKind::Series, merge_imputation(in.tensor, recon, *ctx.window), std::nullopt, std::nullopt};
}

SimpleMlpImpute::SimpleMlpImpute(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("simple_mlp_impute", {ValueKind::Series, ValueKind::Series}, {Task::Impute}),
      cfg_(cfg),
      l1_(ps, "impute.mlp.l1", cfg.d_model_fused, cfg.d_model_fused, rng),
      l2_(ps, "impute.mlp.l2", cfg.d_model_fused, cfg.channels, rng) {}

ToolValue SimpleMlpImpute::run(const ToolValue& in, ToolContext& ctx) {
    if (!ctx.fused.defined()) throw ContractError("simple_mlp_impute needs the fused representation");
    int L = in.tensor.shape()[0];
    Tensor recon = l2_.forward(gelu(l1_.forward(slice(ctx.fused, 0, 0, L))));
    return {ValueKind::Series, merge_imputation(in.tensor, recon, *ctx.window), std::nullopt, std::nullopt};
}

} // namespace tsa
