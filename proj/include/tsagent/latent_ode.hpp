#ifndef TSAGENT_LATENT_ODE_HPP
#define TSAGENT_LATENT_ODE_HPP

#include "tsagent/anchors.hpp"
#include "tsagent/tools_blocks.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tsa {

enum class CompletionStrategy { Ode, Linear, Quadratic, Repeat };

CompletionStrategy completion_from_string(const std::string& s);
std::string completion_name(CompletionStrategy s);

struct OdeConfig {
    int hidden_dim = 128;          // d_h
    double step_size = 0.05;       // 20 solver steps
    int max_steps = 20;            // hard cap on k
    double anchor_pull = 0.5;      // lambda_a, 1.0 pins anchor rows exactly
    double kernel_bandwidth = 4.0; // anchor-conditioning kernel width
    CompletionStrategy strategy = CompletionStrategy::Ode;

    int steps() const;
};

struct LatentTrajectory {
    Tensor states;  // (L+H) x d_h
    int steps_used = 0;
    CompletionStrategy strategy = CompletionStrategy::Ode;
    bool quadratic_fell_back = false;
    // Value-space readout (channel 0 un-normalized to the mean-channel scale).
    std::vector<double> decoded;
};

struct FusedRepresentation {
    Tensor Z;  // (L+H) x d_model
    std::vector<double> gate_values;
};

// Generic explicit RK4 over tensors; post_step (when set) runs after every
// step, e.g. to pull anchor rows. Exposed for convergence checks.
Tensor rk4_integrate(Tensor u0, const std::function<Tensor(const Tensor&)>& f, double step_size,
                     int n_steps, const std::function<Tensor(Tensor)>& post_step = nullptr);

// Anchor-conditioned latent dynamics plus the alternative completion
// strategies and the gated attention fusion with the data embedding.
class NumericReasoner {
public:
    NumericReasoner(ParamStore& ps, int d_model, const OdeConfig& cfg, Rng& rng);

    const OdeConfig& config() const { return cfg_; }
    int hidden_dim() const { return cfg_.hidden_dim; }

    // u0 = Proj(E) extended to L+H rows; horizon rows repeat row L-1.
    Tensor init_latent(const Tensor& embedding, int horizon) const;

    LatentTrajectory integrate(const Tensor& u0, const AnchorSet& anchors, const PriorBundle& priors,
                               int seq_len, int horizon) const;

    // ode -> integrate; linear/quadratic interpolate anchor-embedded rows over
    // the horizon; repeat keeps the repeat-last initialization. Quadratic with
    // fewer than 3 nodes falls back to linear (recorded on the trajectory).
    LatentTrajectory complete(const Tensor& u0, const AnchorSet& anchors, const PriorBundle& priors,
                              int seq_len, int horizon, CompletionStrategy strategy) const;

    // Z = fused + Attn(fused), fused = g.E + (1-g).Proj_back(u); when
    // numeric_enabled is false, Z = E_ext + Attn(E_ext) (ablation path).
    FusedRepresentation fuse(const Tensor& embedding, const LatentTrajectory& traj, int seq_len,
                             int horizon, bool numeric_enabled = true) const;

    // The anchor-implied latent row; channel 0 carries the normalized value
    // so the decode is exact.
    Tensor anchor_embed_row(double v_norm, int tau) const;

    // Per-row conditioning matrix [(L+H) x 2]: kernel-weighted (v, tau) sums.
    Matrix anchor_conditioning(const AnchorSet& anchors, const PriorBundle& priors, int total_rows) const;

    std::vector<double> decode(const Tensor& states, const PriorBundle& priors) const;

private:
    OdeConfig cfg_;
    int d_model_;
    LinearLayer proj_in_;    // d_model -> d_h
    LinearLayer proj_back_;  // d_h -> d_model (independent of proj_in_)
    LinearLayer f1_, f2_;    // dynamics MLP, tanh output
    LinearLayer anchor_tail_;  // (v, tau) -> d_h - 2 tail of the anchor row
    LinearLayer gate_;       // [E ; proj_back(u)] -> 1
    MultiHeadAttention fuse_attn_;

    Tensor dynamics(const Tensor& u, const Tensor& time_enc, const Tensor& cond) const;
    Tensor time_encoding(int total_rows, const PriorBundle& priors) const;
};

} // namespace tsa

#endif // TSAGENT_LATENT_ODE_HPP
