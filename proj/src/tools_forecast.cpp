#include "tsagent/tools_forecast.hpp"

#include "tsagent/signal.hpp"

#include <cmath>

namespace tsa {

namespace {

// Per-channel mean/std over observed entries of the context window.
NormState observed_norm_state(const TimeSeriesWindow& w) {
    NormState st;
    st.strategy = NormStrategy::RevIn;
    int L = w.length(), D = w.channels();
    st.location.resize(static_cast<std::size_t>(D));
    st.scale.resize(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        std::vector<double> obs;
        for (int t = 0; t < L; ++t)
            if (!w.is_masked(t, d)) obs.push_back(w.values.at(t, d));
        if (obs.empty()) throw ChannelEmptyError("channel " + std::to_string(d) + " fully masked");
        st.location[static_cast<std::size_t>(d)] = signal::mean_of(obs);
        st.scale[static_cast<std::size_t>(d)] = std::max(signal::std_of(obs), 1e-8);
    }
    return st;
}

Tensor row_tensor(const std::vector<double>& v) {
    return Tensor::from({1, static_cast<int>(v.size())}, v);
}

} // namespace

ToolValue RevInTool::run(const ToolValue& in, ToolContext& ctx) {
    NormState st = observed_norm_state(*ctx.window);
    std::vector<double> inv(st.scale.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / st.scale[i];
    Tensor y = mul(sub(in.tensor, row_tensor(st.location)), row_tensor(inv));
    ctx.norm_state = std::move(st);
    return {ValueKind::Series, y, std::nullopt, std::nullopt};
}

ToolValue RevInInverseTool::run(const ToolValue& in, ToolContext& ctx) {
    if (!ctx.norm_state) throw ContractError("revin_inverse: no normalization state in context");
    const NormState& st = *ctx.norm_state;
    Tensor y = add(mul(in.tensor, row_tensor(st.scale)), row_tensor(st.location));
    return {ValueKind::Horizon, y, std::nullopt, std::nullopt};
}

std::pair<Tensor, Tensor> DecompositionTool::decompose(const Tensor& series, int kernel) {
    int L = series.shape()[0];
    if (kernel > L) throw ContractError("decomposition kernel " + std::to_string(kernel) +
                                        " exceeds window length " + std::to_string(L));
    if (kernel < 3 || kernel % 2 == 0) throw ContractError("decomposition kernel must be odd and >= 3");
    Tensor trend = avg_pool1d(series, kernel);
    Tensor seasonal = sub(series, trend);
    return {trend, seasonal};
}

ToolValue DecompositionTool::run(const ToolValue& in, ToolContext& ctx) {
    int L = in.tensor.shape()[0];
    int kernel = std::min(kernel_, L % 2 == 0 ? L - 1 : L);
    auto [trend, seasonal] = decompose(in.tensor, kernel);

    // Rule-based trend extension: least-squares line per channel.
    int D = trend.shape()[1];
    std::vector<double> ext(static_cast<std::size_t>(horizon_) * D);
    for (int d = 0; d < D; ++d) {
        std::vector<double> col(static_cast<std::size_t>(L));
        for (int t = 0; t < L; ++t) col[static_cast<std::size_t>(t)] = trend.data()[static_cast<std::size_t>(t) * D + d];
        double slope = signal::least_squares_slope(col);
        double last = col.back();
        for (int h = 0; h < horizon_; ++h) ext[static_cast<std::size_t>(h) * D + d] = last + slope * (h + 1);
    }
    ctx.pending_trend = Tensor::from({horizon_, D}, std::move(ext));
    ctx.notes.push_back("decomposition: trend extended over horizon");
    return {ValueKind::Series, seasonal, std::nullopt, std::nullopt};
}

PatchTransformerForecast::PatchTransformerForecast(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("patch_transformer_forecast", {ValueKind::Series, ValueKind::Horizon}, {Task::Forecast}),
      cfg_(cfg),
      embed_(ps, "forecast.pt.embed", cfg.seq_len, cfg.patch, rng),
      encoder_(ps, "forecast.pt.enc", cfg.e_layers, cfg.patch.d_model, cfg.heads, cfg.d_ff, cfg.dropout,
               rng),
      head_(ps, "forecast.pt.head", embed_.n_patches, cfg.patch.d_model, cfg.horizon, rng,
            /*zero_init=*/true) {
    z_resid_.w = ps.create_const("forecast.pt.zres.w", {cfg.d_model_fused, cfg.channels}, 0.0);
    z_resid_.b = ps.create_const("forecast.pt.zres.b", {cfg.channels}, 0.0);
}

ToolValue PatchTransformerForecast::run(const ToolValue& in, ToolContext& ctx) {
    int L = in.tensor.shape()[0], D = in.tensor.shape()[1];
    std::vector<Tensor> channel_preds;
    channel_preds.reserve(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        Tensor col = slice(in.tensor, 1, d, d + 1);  // [L x 1]
        Tensor tokens = embed_.forward(col);
        Tensor enc = encoder_.forward(tokens, ctx.training, ctx.drop_seed + static_cast<std::uint64_t>(d));
        Tensor pred = head_.forward(enc);            // [1 x H]
        channel_preds.push_back(transpose(pred));    // [H x 1]
    }
    Tensor out = concat(channel_preds, 1);           // [H x D]
    if (ctx.fused.defined()) {
        Tensor z_h = slice(ctx.fused, 0, L, L + cfg_.horizon);
        out = add(out, z_resid_.forward(z_h));
    }
    return {ValueKind::Horizon, out, std::nullopt, std::nullopt};
}

ToolValue LinearTrendForecast::run(const ToolValue& in, ToolContext& ctx) {
    const TimeSeriesWindow& w = *ctx.window;
    int L = in.tensor.shape()[0], D = in.tensor.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(horizon_) * D);
    for (int d = 0; d < D; ++d) {
        std::vector<double> ts, ys;
        for (int t = 0; t < L; ++t) {
            if (w.is_masked(t, d)) continue;
            ts.push_back(t);
            ys.push_back(in.tensor.data()[static_cast<std::size_t>(t) * D + d]);
        }
        double tm = signal::mean_of(ts), ym = signal::mean_of(ys), num = 0, den = 0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            num += (ts[i] - tm) * (ys[i] - ym);
            den += (ts[i] - tm) * (ts[i] - tm);
        }
        double slope = den > 0 ? num / den : 0.0;
        double intercept = ym - slope * tm;
        for (int h = 0; h < horizon_; ++h)
            out[static_cast<std::size_t>(h) * D + d] = intercept + slope * (L + h);
    }
    return {ValueKind::Horizon, Tensor::from({horizon_, D}, std::move(out)), std::nullopt, std::nullopt};
}

ToolValue RepeatLastForecast::run(const ToolValue& in, ToolContext& ctx) {
    const TimeSeriesWindow& w = *ctx.window;
    int L = in.tensor.shape()[0], D = in.tensor.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(horizon_) * D);
    for (int d = 0; d < D; ++d) {
        double last = 0.0;
        for (int t = L - 1; t >= 0; --t) {
            if (!w.is_masked(t, d)) {
                last = in.tensor.data()[static_cast<std::size_t>(t) * D + d];
                break;
            }
        }
        for (int h = 0; h < horizon_; ++h) out[static_cast<std::size_t>(h) * D + d] = last;
    }
    return {ValueKind::Horizon, Tensor::from({horizon_, D}, std::move(out)), std::nullopt, std::nullopt};
}

SimpleMlpForecast::SimpleMlpForecast(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("simple_mlp_forecast", {ValueKind::Series, ValueKind::Horizon}, {Task::Forecast}),
      cfg_(cfg),
      l1_(ps, "forecast.mlp.l1", cfg.d_model_fused, cfg.d_model_fused, rng),
      l2_(ps, "forecast.mlp.l2", cfg.d_model_fused, cfg.channels, rng) {}

ToolValue SimpleMlpForecast::run(const ToolValue&, ToolContext& ctx) {
    if (!ctx.fused.defined()) throw ContractError("simple_mlp_forecast needs the fused representation");
    Tensor z_h = slice(ctx.fused, 0, cfg_.seq_len, cfg_.seq_len + cfg_.horizon);
    Tensor out = l2_.forward(gelu(l1_.forward(z_h)));
    return {ValueKind::Horizon, out, std::nullopt, std::nullopt};
}

} // namespace tsa
