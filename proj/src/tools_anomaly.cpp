#include "tsagent/tools_anomaly.hpp"

#include "tsagent/signal.hpp"

#include <cmath>

namespace tsa {

namespace {

// Per-channel standardization constants over the whole window.
void window_stats(const Tensor& x, std::vector<double>& loc, std::vector<double>& scl) {
    int L = x.shape()[0], D = x.shape()[1];
    loc.assign(static_cast<std::size_t>(D), 0.0);
    scl.assign(static_cast<std::size_t>(D), 1.0);
    for (int d = 0; d < D; ++d) {
        std::vector<double> col(static_cast<std::size_t>(L));
        for (int t = 0; t < L; ++t) col[static_cast<std::size_t>(t)] = x.data()[static_cast<std::size_t>(t) * D + d];
        loc[static_cast<std::size_t>(d)] = signal::mean_of(col);
        scl[static_cast<std::size_t>(d)] = std::max(signal::std_of(col), 1e-8);
    }
}

} // namespace

MultiScaleAnomaly::MultiScaleAnomaly(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("multiscale_anomaly", {ValueKind::Series, ValueKind::Scores}, {Task::Detect}), cfg_(cfg) {
    int d = cfg.anomaly_d;
    affine_gain_ = ps.create_const("anomaly.ms.gain", {1, cfg.channels}, 1.0);
    affine_bias_ = ps.create_const("anomaly.ms.bias", {1, cfg.channels}, 0.0);

    PatchConfig fine{4, 2, d};
    PatchConfig coarse{16, 8, d};
    fine_.embed = PatchEmbed(ps, "anomaly.ms.fine.embed", cfg.seq_len, fine, rng);
    fine_.encoder = TransformerEncoder(ps, "anomaly.ms.fine.enc", 1, d, 2, 2 * d, cfg.dropout, rng);
    fine_.recon = FlattenHead(ps, "anomaly.ms.fine.recon", fine_.embed.n_patches, d, cfg.seq_len, rng);
    coarse_.embed = PatchEmbed(ps, "anomaly.ms.coarse.embed", cfg.seq_len, coarse, rng);
    coarse_.encoder = TransformerEncoder(ps, "anomaly.ms.coarse.enc", 1, d, 2, 2 * d, cfg.dropout, rng);
    coarse_.recon =
        FlattenHead(ps, "anomaly.ms.coarse.recon", coarse_.embed.n_patches, d, cfg.seq_len, rng);

    fuse1_ = LinearLayer(ps, "anomaly.ms.fuse1", 2 * cfg.channels, d, rng);
    fuse2_ = LinearLayer(ps, "anomaly.ms.fuse2", d, cfg.channels, rng);
    attn_ = LinearLayer(ps, "anomaly.ms.attn", d, 1, rng);
    z_resid_.w = ps.create_const("anomaly.ms.zres.w", {cfg.d_model_fused, cfg.channels}, 0.0);
    z_resid_.b = ps.create_const("anomaly.ms.zres.b", {cfg.channels}, 0.0);
}

MultiScaleAnomaly::Reconstruction MultiScaleAnomaly::reconstruct(const Tensor& norm_series,
                                                                 ToolContext& ctx) const {
    int L = norm_series.shape()[0], D = norm_series.shape()[1];
    auto branch_recon = [&](const Branch& br, std::uint64_t salt) {
        std::vector<Tensor> cols;
        cols.reserve(static_cast<std::size_t>(D));
        for (int d = 0; d < D; ++d) {
            Tensor col = slice(norm_series, 1, d, d + 1);
            Tensor tokens = br.embed.forward(col);
            Tensor enc = br.encoder.forward(tokens, ctx.training, ctx.drop_seed + salt + static_cast<std::uint64_t>(d));
            cols.push_back(transpose(br.recon.forward(enc)));
        }
        return concat(cols, 1);  // [L x D]
    };
    Tensor r_fine = branch_recon(fine_, 101);
    Tensor r_coarse = branch_recon(coarse_, 202);
    Reconstruction out;
    out.hidden = gelu(fuse1_.forward(concat({r_fine, r_coarse}, 1)));
    out.recon = fuse2_.forward(out.hidden);
    if (ctx.fused.defined()) out.recon = add(out.recon, z_resid_.forward(slice(ctx.fused, 0, 0, L)));
    return out;
}

ToolValue MultiScaleAnomaly::run(const ToolValue& in, ToolContext& ctx) {
    int D = in.tensor.shape()[1];
    std::vector<double> loc, scl;
    window_stats(in.tensor, loc, scl);
    std::vector<double> inv(scl.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scl[i];
    Tensor norm = mul(sub(in.tensor, Tensor::from({1, D}, loc)), Tensor::from({1, D}, inv));
    norm = add(mul(norm, affine_gain_), affine_bias_);

    Reconstruction rec = reconstruct(norm, ctx);

    Tensor attn_logits = attn_.forward(rec.hidden);          // [L x 1]
    Tensor alpha = softmax(transpose(attn_logits));          // [1 x L]
    Tensor alpha_col = transpose(alpha);                     // [L x 1]

    Tensor err = power(sub(norm, rec.recon), 2.0);           // [L x D]
    Tensor per_step = sum(err, 1);                           // [L x 1]
    Tensor scores = mul(per_step, alpha_col);
    ToolValue out{ValueKind::Scores, scores, alpha_col, std::nullopt};
    out.objective = mean(per_step);  // alpha trains only through the shared trunk
    return out;
}

VaeAnomaly::VaeAnomaly(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("vae_anomaly", {ValueKind::Series, ValueKind::Scores}, {Task::Detect}), cfg_(cfg) {
    int flat = cfg.seq_len * cfg.channels;
    enc1_ = LinearLayer(ps, "anomaly.vae.enc1", flat, cfg.vae_hidden, rng);
    enc_mu_ = LinearLayer(ps, "anomaly.vae.mu", cfg.vae_hidden, cfg.vae_latent, rng);
    enc_logvar_.w = ps.create_const("anomaly.vae.logvar.w", {cfg.vae_hidden, cfg.vae_latent}, 0.0);
    enc_logvar_.b = ps.create_const("anomaly.vae.logvar.b", {cfg.vae_latent}, 0.0);
    dec1_ = LinearLayer(ps, "anomaly.vae.dec1", cfg.vae_latent, cfg.vae_hidden, rng);
    dec2_ = LinearLayer(ps, "anomaly.vae.dec2", cfg.vae_hidden, flat, rng);
}

Tensor VaeAnomaly::kl_divergence(const Tensor& mu, const Tensor& logvar) {
    Tensor sigma2 = exp(logvar);
    Tensor term = sub(sub(add(power(mu, 2.0), sigma2), Tensor::scalar(1.0)), logvar);
    return mul(sum(term), Tensor::scalar(0.5));
}

ToolValue VaeAnomaly::run(const ToolValue& in, ToolContext& ctx) {
    int L = in.tensor.shape()[0], D = in.tensor.shape()[1];
    std::vector<double> loc, scl;
    window_stats(in.tensor, loc, scl);
    std::vector<double> inv(scl.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scl[i];
    Tensor norm = mul(sub(in.tensor, Tensor::from({1, D}, loc)), Tensor::from({1, D}, inv));

    Tensor flat = reshape(norm, {1, L * D});
    Tensor h = gelu(enc1_.forward(flat));
    Tensor mu = enc_mu_.forward(h);
    Tensor logvar = enc_logvar_.forward(h);

    Tensor z = mu;
    if (ctx.training) {
        // reparameterized sample with a seeded standard-normal draw
        Rng rng = Rng::fork(ctx.drop_seed, 0x7ae);
        std::vector<double> eps(static_cast<std::size_t>(cfg_.vae_latent));
        for (auto& e : eps) e = rng.normal();
        Tensor sigma = exp(mul(logvar, Tensor::scalar(0.5)));
        z = add(mu, mul(sigma, Tensor::from({1, cfg_.vae_latent}, eps)));
    }
    Tensor recon = reshape(dec2_.forward(gelu(dec1_.forward(z))), {L, D});

    Tensor err = sum(power(sub(norm, recon), 2.0), 1);  // [L x 1]
    Tensor kl = kl_divergence(mu, logvar);
    // per-step score: reconstruction error plus the window KL spread evenly
    Tensor scores = add(err, mul(kl, Tensor::scalar(cfg_.vae_beta / L)));
    ToolValue out{ValueKind::Scores, scores, std::nullopt, std::nullopt};
    out.objective = mean(scores);  // mean recon error plus beta * KL / L
    return out;
}

std::vector<double> ZScoreAnomaly::scores_for(const TimeSeriesWindow& window) {
    int L = window.length(), D = window.channels();
    std::vector<double> out(static_cast<std::size_t>(L), 0.0);
    for (int d = 0; d < D; ++d) {
        std::vector<double> col = window.values.column(d);
        double mu = signal::mean_of(col);
        double sd = std::max(signal::std_of(col), 1e-8);
        for (int t = 0; t < L; ++t) {
            double z = (col[static_cast<std::size_t>(t)] - mu) / sd;
            out[static_cast<std::size_t>(t)] += z * z / D;
        }
    }
    return out;
}

ToolValue ZScoreAnomaly::run(const ToolValue&, ToolContext& ctx) {
    auto scores = scores_for(*ctx.window);
    int L = static_cast<int>(scores.size());
    return {ValueKind::Scores, Tensor::from({L, 1}, scores), std::nullopt, std::nullopt};
}

SimpleMlpAnomaly::SimpleMlpAnomaly(ParamStore& ps, const ToolBuildConfig& cfg, Rng& rng)
    : ToolBase("simple_mlp_anomaly", {ValueKind::Series, ValueKind::Scores}, {Task::Detect}),
      cfg_(cfg),
      l1_(ps, "anomaly.mlp.l1", cfg.d_model_fused, cfg.d_model_fused, rng),
      l2_(ps, "anomaly.mlp.l2", cfg.d_model_fused, cfg.channels, rng) {}

ToolValue SimpleMlpAnomaly::run(const ToolValue& in, ToolContext& ctx) {
    if (!ctx.fused.defined()) throw ContractError("simple_mlp_anomaly needs the fused representation");
    int L = in.tensor.shape()[0], D = in.tensor.shape()[1];
    std::vector<double> loc, scl;
    window_stats(in.tensor, loc, scl);
    std::vector<double> inv(scl.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scl[i];
    Tensor norm = mul(sub(in.tensor, Tensor::from({1, D}, loc)), Tensor::from({1, D}, inv));
    Tensor recon = l2_.forward(gelu(l1_.forward(slice(ctx.fused, 0, 0, L))));
    Tensor err = sum(power(sub(norm, recon), 2.0), 1);
    ToolValue out{ValueKind::Scores, err, std::nullopt, std::nullopt};
    out.objective = mean(err);
    return out;
}

} // namespace tsa
