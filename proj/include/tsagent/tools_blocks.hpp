#ifndef TSAGENT_TOOLS_BLOCKS_HPP
#define TSAGENT_TOOLS_BLOCKS_HPP

#include "tsagent/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tsa {

struct LinearLayer {
    Tensor w, b;
    LinearLayer() = default;
    LinearLayer(ParamStore& ps, const std::string& prefix, int din, int dout, Rng& rng);
    Tensor forward(const Tensor& x) const { return embedding_project(x, w, b); }
};

// Learned elementwise affine applied after layer_norm.
struct LayerNormAffine {
    Tensor gain, bias;  // [1 x d]
    LayerNormAffine() = default;
    LayerNormAffine(ParamStore& ps, const std::string& prefix, int d);
    Tensor forward(const Tensor& x) const { return add(mul(layer_norm(x), gain), bias); }
};

struct MultiHeadAttention {
    int heads = 4;
    int d_model = 64;
    LinearLayer wq, wk, wv, wo;
    MultiHeadAttention() = default;
    MultiHeadAttention(ParamStore& ps, const std::string& prefix, int d_model, int heads, Rng& rng);
    // queries from q_in, keys/values from kv_in (self-attention when equal)
    Tensor forward(const Tensor& q_in, const Tensor& kv_in) const;
};

// Post-norm transformer encoder layer with a GELU feed-forward.
struct EncoderLayer {
    MultiHeadAttention attn;
    LinearLayer ff1, ff2;
    LayerNormAffine ln1, ln2;
    double dropout = 0.1;
    EncoderLayer() = default;
    EncoderLayer(ParamStore& ps, const std::string& prefix, int d_model, int heads, int d_ff,
                 double dropout, Rng& rng);
    Tensor forward(const Tensor& x, bool training, std::uint64_t drop_seed) const;
};

struct TransformerEncoder {
    std::vector<EncoderLayer> layers;
    TransformerEncoder() = default;
    TransformerEncoder(ParamStore& ps, const std::string& prefix, int n_layers, int d_model, int heads,
                       int d_ff, double dropout, Rng& rng);
    Tensor forward(const Tensor& x, bool training, std::uint64_t drop_seed) const;
};

// Fixed sinusoidal position table as a constant tensor [n x d].
Tensor positional_encoding(int n, int d);

struct PatchConfig {
    int patch_len = 16;
    int stride = 8;
    int d_model = 64;
};

// floor((L - p)/s) + 2 after replicate-padding the tail by one stride.
int patch_count(int seq_len, const PatchConfig& cfg);

// Channel-independent patch tokenizer: [L x 1] -> [N_p x d].
struct PatchEmbed {
    PatchConfig cfg;
    int seq_len = 0;
    int n_patches = 0;
    LinearLayer proj;
    Tensor pos;  // learned positional embedding [N_p x d]

    PatchEmbed() = default;
    PatchEmbed(ParamStore& ps, const std::string& prefix, int seq_len, const PatchConfig& cfg, Rng& rng);
    Tensor forward(const Tensor& channel) const;  // channel: [L x 1]
};

// Flattens [N_p x d] and projects to [1 x out_len]; shared across channels.
struct FlattenHead {
    int n_patches = 0, d_model = 0, out_len = 0;
    LinearLayer proj;
    FlattenHead() = default;
    FlattenHead(ParamStore& ps, const std::string& prefix, int n_patches, int d_model, int out_len,
                Rng& rng, bool zero_init = false);
    Tensor forward(const Tensor& tokens) const;
};

} // namespace tsa

#endif // TSAGENT_TOOLS_BLOCKS_HPP
