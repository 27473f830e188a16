#include "tsagent/memory.hpp"

#include "tsagent/errors.hpp"

namespace tsa {

const char* agent_name(AgentId id) {
    switch (id) {
        case AgentId::Analyzer: return "analyzer";
        case AgentId::Reasoner: return "reasoner";
        case AgentId::Executor: return "executor";
    }
    return "?";
}

SharedMemory SharedMemory::init(int seq_len, int d_m, bool enabled) {
    SharedMemory m;
    m.rows = seq_len;
    m.dim = d_m;
    m.enabled = enabled;
    m.M = Tensor::zeros({seq_len, d_m});
    return m;
}

Tensor SharedMemory::read() const {
    if (!enabled) return Tensor::zeros({rows, dim});
    return M;
}

Coordination::Coordination(ParamStore& ps, const CoordinationConfig& cfg, int seq_len,
                           int window_channels, Rng& rng)
    : cfg_(cfg), seq_len_(seq_len) {
    pos_ = positional_encoding(seq_len, cfg.d_m);
    embed_data_ = LinearLayer(ps, "coord.embed_data", window_channels, cfg.d_model, rng);
    int carrier_width[3] = {window_channels, cfg.d_h + 2, cfg.d_model};
    for (int i = 0; i < 3; ++i) {
        std::string prefix = std::string("coord.") + agent_name(static_cast<AgentId>(i));
        embed_agent_[i] = LinearLayer(ps, prefix + ".embed", carrier_width[i], cfg.d_m, rng);
        alpha_head_[i] = LinearLayer(ps, prefix + ".alpha", cfg.d_m, 1, rng);
        for (int l = 0; l < cfg.e_layers; ++l)
            enc_layers_[i].emplace_back(ps, prefix + ".enc" + std::to_string(l), cfg.d_m, cfg.heads, rng);
        affine_mix_[i] = LinearLayer(ps, prefix + ".mix", 2 * cfg.d_m, cfg.d_m, rng);
        com_ln_[i] = LayerNormAffine(ps, prefix + ".com_ln", cfg.d_m);
        gate_[i] = LinearLayer(ps, prefix + ".gate", 2 * cfg.d_m, cfg.d_m, rng);
    }
}

Tensor Coordination::embed_data(const Tensor& window_values) const {
    Tensor e = embed_data_.forward(window_values);
    return add(e, positional_encoding(window_values.shape()[0], cfg_.d_model));
}

AgentState Coordination::agent_forward(AgentId id, const Tensor& carrier,
                                       const SharedMemory& memory) const {
    (void)memory;  // the agent's memory view enters through communicate()
    int i = static_cast<int>(id);
    if (carrier.shape()[0] != seq_len_)
        throw ShapeError("agent carrier must have L rows, got " + shape_str(carrier.shape()));
    Tensor embedding = add(embed_agent_[i].forward(carrier), pos_);
    AgentState st;
    st.id = id;
    st.h = layer_norm(embedding);
    st.alpha = sigmoid(alpha_head_[i].forward(mean(st.h, 0)));
    return st;
}

Tensor Coordination::communicate(const AgentState& state, const SharedMemory& memory) const {
    int i = static_cast<int>(state.id);
    Tensor mem = memory.read();
    Tensor enc_out;
    if (cfg_.gated_attention) {
        Tensor x = state.h;
        for (const auto& layer : enc_layers_[i]) x = layer.forward(x, mem);
        enc_out = x;
    } else {
        enc_out = affine_mix_[i].forward(concat({state.h, mem}, 1));
    }
    return add(state.h, com_ln_[i].forward(enc_out));
}

void Coordination::memory_update(SharedMemory& memory, const AgentState& state,
                                 const Tensor& message) const {
    double a = state.alpha_value();
    if (!memory.enabled || a == 0.0) {
        memory.update_log.push_back({state.id, a});
        return;
    }
    int i = static_cast<int>(state.id);
    Tensor gamma = sigmoid(gate_[i].forward(concat({memory.M, message}, 1)));
    Tensor eff = mul(gamma, state.alpha);  // alpha broadcasts as scalar
    Tensor one_minus = sub(Tensor::scalar(1.0), eff);
    memory.M = add(mul(one_minus, memory.M), mul(eff, message));
    memory.update_log.push_back({state.id, a});
}

Tensor Coordination::memory_regularizer(const Tensor& before, const Tensor& after) {
    if (before.shape() != after.shape())
        throw ShapeError("memory_regularizer: shape mismatch");
    return mean(power(sub(after, before), 2.0));
}

} // namespace tsa
