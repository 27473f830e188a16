#ifndef TSAGENT_MEMORY_HPP
#define TSAGENT_MEMORY_HPP

#include "tsagent/tools_blocks.hpp"

#include <string>
#include <vector>

namespace tsa {

enum class AgentId { Analyzer = 0, Reasoner = 1, Executor = 2 };

const char* agent_name(AgentId id);

// L x d_m gated memory matrix coordinating the three agents. One pipeline
// (one window) owns one instance; updates are ordered Analyzer -> Reasoner ->
// Executor by the pipeline.
struct SharedMemory {
    Tensor M;  // graph tensor so gradients flow through updates
    bool enabled = true;
    int rows = 0, dim = 0;

    struct UpdateLogEntry {
        AgentId agent;
        double alpha;
    };
    std::vector<UpdateLogEntry> update_log;

    static SharedMemory init(int seq_len, int d_m, bool enabled = true);
    // Zeroes when disabled (reads must stay valid under the ablation).
    Tensor read() const;
};

struct AgentState {
    AgentId id = AgentId::Analyzer;
    Tensor h;      // L x d_m, layer-normalized embedding
    Tensor alpha;  // scalar in (0,1), sigmoid head
    double alpha_value() const { return alpha.item(); }
};

struct CoordinationConfig {
    int d_m = 64;
    int d_model = 64;
    int d_h = 128;
    int e_layers = 2;
    int heads = 4;
    double lambda_com = 0.01;
    bool gated_attention = true;   // off -> single affine mix communication
    bool shared_memory = true;
};

// Agent embeddings, the communication encoder, and the gated memory update.
class Coordination {
public:
    Coordination(ParamStore& ps, const CoordinationConfig& cfg, int seq_len, int window_channels,
                 Rng& rng);

    const CoordinationConfig& config() const { return cfg_; }

    // Data embedding E: learned affine of the normalized window plus the
    // sinusoidal position table; L x d_model.
    Tensor embed_data(const Tensor& window_values) const;

    // carrier width per agent: Analyzer D, Reasoner d_h + 2, Executor d_model.
    AgentState agent_forward(AgentId id, const Tensor& carrier, const SharedMemory& memory) const;

    // Com(h | M) = h + LN(Enc(h, M)); Enc is a stack of e_layers cross-attention
    // layers, or a single affine mix when gated attention is ablated.
    Tensor communicate(const AgentState& state, const SharedMemory& memory) const;

    // M <- (1 - alpha*gamma) . M + (alpha*gamma) . message, gamma learned
    // per element; alpha exactly 0 leaves M bit-identical.
    void memory_update(SharedMemory& memory, const AgentState& state, const Tensor& message) const;

    // Mean squared per-element difference; the communication regularizer.
    static Tensor memory_regularizer(const Tensor& before, const Tensor& after);

private:
    CoordinationConfig cfg_;
    int seq_len_;
    Tensor pos_;  // L x d_m constant
    LinearLayer embed_data_;
    LinearLayer embed_agent_[3];
    LinearLayer alpha_head_[3];
    std::vector<MultiHeadAttention> enc_layers_[3];
    LinearLayer affine_mix_[3];   // ablation path, [h ; M] -> d_m
    LayerNormAffine com_ln_[3];
    LinearLayer gate_[3];         // [M ; msg] -> d_m
};

} // namespace tsa

#endif // TSAGENT_MEMORY_HPP
