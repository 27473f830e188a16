#include "tsagent/tools_blocks.hpp"

#include "tsagent/errors.hpp"

#include <cmath>

namespace tsa {

LinearLayer::LinearLayer(ParamStore& ps, const std::string& prefix, int din, int dout, Rng& rng) {
    double scale = 1.0 / std::sqrt(static_cast<double>(din));
    w = ps.create(prefix + ".w", {din, dout}, rng, scale);
    b = ps.create_const(prefix + ".b", {dout}, 0.0);
}

LayerNormAffine::LayerNormAffine(ParamStore& ps, const std::string& prefix, int d) {
    gain = ps.create_const(prefix + ".gain", {1, d}, 1.0);
    bias = ps.create_const(prefix + ".bias", {1, d}, 0.0);
}

MultiHeadAttention::MultiHeadAttention(ParamStore& ps, const std::string& prefix, int d_model_,
                                       int heads_, Rng& rng)
    : heads(heads_), d_model(d_model_) {
    if (d_model % heads != 0) throw ContractError("attention: d_model must be divisible by heads");
    wq = LinearLayer(ps, prefix + ".wq", d_model, d_model, rng);
    wk = LinearLayer(ps, prefix + ".wk", d_model, d_model, rng);
    wv = LinearLayer(ps, prefix + ".wv", d_model, d_model, rng);
    wo = LinearLayer(ps, prefix + ".wo", d_model, d_model, rng);
}

Tensor MultiHeadAttention::forward(const Tensor& q_in, const Tensor& kv_in) const {
    int dk = d_model / heads;
    Tensor q = wq.forward(q_in);
    Tensor k = wk.forward(kv_in);
    Tensor v = wv.forward(kv_in);
    Tensor inv_sqrt = Tensor::scalar(1.0 / std::sqrt(static_cast<double>(dk)));
    std::vector<Tensor> head_outs;
    head_outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice(q, 1, h * dk, (h + 1) * dk);
        Tensor kh = slice(k, 1, h * dk, (h + 1) * dk);
        Tensor vh = slice(v, 1, h * dk, (h + 1) * dk);
        Tensor scores = mul(matmul(qh, transpose(kh)), inv_sqrt);
        head_outs.push_back(matmul(softmax(scores), vh));
    }
    return wo.forward(concat(head_outs, 1));
}

EncoderLayer::EncoderLayer(ParamStore& ps, const std::string& prefix, int d_model, int heads, int d_ff,
                           double dropout_, Rng& rng)
    : attn(ps, prefix + ".attn", d_model, heads, rng),
      ff1(ps, prefix + ".ff1", d_model, d_ff, rng),
      ff2(ps, prefix + ".ff2", d_ff, d_model, rng),
      ln1(ps, prefix + ".ln1", d_model),
      ln2(ps, prefix + ".ln2", d_model),
      dropout(dropout_) {}

Tensor EncoderLayer::forward(const Tensor& x, bool training, std::uint64_t drop_seed) const {
    Tensor a = attn.forward(x, x);
    if (training && dropout > 0.0) a = dropout_mask(a, dropout, drop_seed);
    Tensor y = ln1.forward(add(x, a));
    Tensor f = ff2.forward(gelu(ff1.forward(y)));
    if (training && dropout > 0.0) f = dropout_mask(f, dropout, drop_seed ^ 0x9e37);
    return ln2.forward(add(y, f));
}

TransformerEncoder::TransformerEncoder(ParamStore& ps, const std::string& prefix, int n_layers,
                                       int d_model, int heads, int d_ff, double dropout, Rng& rng) {
    for (int l = 0; l < n_layers; ++l)
        layers.emplace_back(ps, prefix + ".layer" + std::to_string(l), d_model, heads, d_ff, dropout, rng);
}

Tensor TransformerEncoder::forward(const Tensor& x, bool training, std::uint64_t drop_seed) const {
    Tensor y = x;
    for (std::size_t l = 0; l < layers.size(); ++l)
        y = layers[l].forward(y, training, drop_seed + 0x1000 * (l + 1));
    return y;
}

Tensor positional_encoding(int n, int d) {
    std::vector<double> data(static_cast<std::size_t>(n) * d);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < d; ++i) {
            double angle = t / std::pow(10000.0, 2.0 * (i / 2) / d);
            data[static_cast<std::size_t>(t) * d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return Tensor::from({n, d}, std::move(data));
}

int patch_count(int seq_len, const PatchConfig& cfg) {
    if (seq_len < cfg.patch_len)
        throw ContractError("patch_embed: sequence length " + std::to_string(seq_len) +
                            " shorter than patch length " + std::to_string(cfg.patch_len));
    return (seq_len - cfg.patch_len) / cfg.stride + 2;
}

PatchEmbed::PatchEmbed(ParamStore& ps, const std::string& prefix, int seq_len_, const PatchConfig& cfg_,
                       Rng& rng)
    : cfg(cfg_), seq_len(seq_len_), n_patches(patch_count(seq_len_, cfg_)) {
    proj = LinearLayer(ps, prefix + ".proj", cfg.patch_len, cfg.d_model, rng);
    pos = ps.create(prefix + ".pos", {n_patches, cfg.d_model}, rng, 0.02);
}

Tensor PatchEmbed::forward(const Tensor& channel) const {
    if (channel.shape().size() != 2 || channel.shape()[1] != 1 || channel.shape()[0] != seq_len)
        throw ShapeError("patch_embed expects [" + std::to_string(seq_len) + " x 1], got " +
                         shape_str(channel.shape()));
    // Replicate-pad the tail by one stride.
    Tensor last = slice(channel, 0, seq_len - 1, seq_len);
    std::vector<Tensor> parts{channel};
    for (int i = 0; i < cfg.stride; ++i) parts.push_back(last);
    Tensor padded = concat(parts, 0);

    std::vector<Tensor> patches;
    patches.reserve(static_cast<std::size_t>(n_patches));
    for (int i = 0; i < n_patches; ++i) {
        Tensor p = slice(padded, 0, i * cfg.stride, i * cfg.stride + cfg.patch_len);
        patches.push_back(reshape(p, {1, cfg.patch_len}));
    }
    Tensor unfolded = concat(patches, 0);  // [N_p x patch_len]
    return add(proj.forward(unfolded), pos);
}

FlattenHead::FlattenHead(ParamStore& ps, const std::string& prefix, int n_patches_, int d_model_,
                         int out_len_, Rng& rng, bool zero_init)
    : n_patches(n_patches_), d_model(d_model_), out_len(out_len_) {
    if (zero_init) {
        proj.w = ps.create_const(prefix + ".w", {n_patches * d_model, out_len}, 0.0);
        proj.b = ps.create_const(prefix + ".b", {out_len}, 0.0);
    } else {
        proj = LinearLayer(ps, prefix, n_patches * d_model, out_len, rng);
    }
}

Tensor FlattenHead::forward(const Tensor& tokens) const {
    return proj.forward(reshape(tokens, {1, n_patches * d_model}));
}

} // namespace tsa
