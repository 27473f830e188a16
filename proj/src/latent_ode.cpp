#include "tsagent/latent_ode.hpp"

#include "tsagent/errors.hpp"
#include "tsagent/signal.hpp"

#include <algorithm>
#include <cmath>

namespace tsa {

CompletionStrategy completion_from_string(const std::string& s) {
    if (s == "ode") return CompletionStrategy::Ode;
    if (s == "linear") return CompletionStrategy::Linear;
    if (s == "quadratic") return CompletionStrategy::Quadratic;
    if (s == "repeat") return CompletionStrategy::Repeat;
    throw ConfigError("unknown completion strategy '" + s + "'");
}

std::string completion_name(CompletionStrategy s) {
    switch (s) {
        case CompletionStrategy::Ode: return "ode";
        case CompletionStrategy::Linear: return "linear";
        case CompletionStrategy::Quadratic: return "quadratic";
        case CompletionStrategy::Repeat: return "repeat";
    }
    return "?";
}

int OdeConfig::steps() const {
    if (step_size <= 0.0) throw ContractError("ode step_size must be positive");
    int n = static_cast<int>(std::lround(1.0 / step_size));
    return std::min(std::max(n, 1), max_steps);
}

Tensor rk4_integrate(Tensor u0, const std::function<Tensor(const Tensor&)>& f, double step_size,
                     int n_steps, const std::function<Tensor(Tensor)>& post_step) {
    Tensor u = std::move(u0);
    Tensor h = Tensor::scalar(step_size);
    Tensor half_h = Tensor::scalar(step_size / 2.0);
    Tensor sixth_h = Tensor::scalar(step_size / 6.0);
    Tensor two = Tensor::scalar(2.0);
    for (int s = 0; s < n_steps; ++s) {
        Tensor k1 = f(u);
        Tensor k2 = f(add(u, mul(half_h, k1)));
        Tensor k3 = f(add(u, mul(half_h, k2)));
        Tensor k4 = f(add(u, mul(h, k3)));
        Tensor incr = add(add(k1, k4), mul(two, add(k2, k3)));
        u = add(u, mul(sixth_h, incr));
        if (post_step) u = post_step(std::move(u));
    }
    return u;
}

NumericReasoner::NumericReasoner(ParamStore& ps, int d_model, const OdeConfig& cfg, Rng& rng)
    : cfg_(cfg), d_model_(d_model) {
    int dh = cfg.hidden_dim;
    if (dh < 3) throw ContractError("ode hidden_dim must be at least 3");
    proj_in_ = LinearLayer(ps, "numeric.proj_in", d_model, dh, rng);
    proj_back_ = LinearLayer(ps, "numeric.proj_back", dh, d_model, rng);
    // dynamics input: [z ; time encoding (3) ; anchor conditioning (2)]
    f1_ = LinearLayer(ps, "numeric.f1", dh + 5, dh, rng);
    f2_ = LinearLayer(ps, "numeric.f2", dh, dh, rng);
    anchor_tail_ = LinearLayer(ps, "numeric.anchor_tail", 2, dh - 2, rng);
    gate_ = LinearLayer(ps, "numeric.gate", 2 * d_model, 1, rng);
    fuse_attn_ = MultiHeadAttention(ps, "numeric.fuse_attn", d_model, 4, rng);
}

Tensor NumericReasoner::init_latent(const Tensor& embedding, int horizon) const {
    if (embedding.shape().size() != 2 || embedding.shape()[1] != d_model_)
        throw ShapeError("init_latent: embedding must be [L x d_model]");
    Tensor u = proj_in_.forward(embedding);
    if (horizon == 0) return u;
    int L = u.shape()[0];
    Tensor last = slice(u, 0, L - 1, L);
    std::vector<Tensor> parts{u};
    for (int h = 0; h < horizon; ++h) parts.push_back(last);
    return concat(parts, 0);
}

Tensor NumericReasoner::time_encoding(int total_rows, const PriorBundle& priors) const {
    int period = priors.periodicity ? priors.periodicity->period : total_rows;
    std::vector<double> data(static_cast<std::size_t>(total_rows) * 3);
    for (int t = 0; t < total_rows; ++t) {
        double tn = total_rows > 1 ? static_cast<double>(t) / (total_rows - 1) : 0.0;
        data[static_cast<std::size_t>(t) * 3 + 0] = tn;
        data[static_cast<std::size_t>(t) * 3 + 1] = std::sin(2.0 * M_PI * t / period);
        data[static_cast<std::size_t>(t) * 3 + 2] = std::cos(2.0 * M_PI * t / period);
    }
    return Tensor::from({total_rows, 3}, std::move(data));
}

Matrix NumericReasoner::anchor_conditioning(const AnchorSet& anchors, const PriorBundle& priors,
                                            int total_rows) const {
    Matrix cond(total_rows, 2, 0.0);
    if (anchors.anchors.empty()) return cond;  // empty sum contributes zeros
    double mu = signal::mean_of(priors.mean_channel);
    double sd = std::max(signal::std_of(priors.mean_channel), 1e-8);
    double w = std::max(cfg_.kernel_bandwidth, 1e-6);
    for (int t = 0; t < total_rows; ++t) {
        // softmax over anchors of -|t - t_k| / w
        double mx = -1e300;
        for (const auto& a : anchors.anchors) mx = std::max(mx, -std::fabs(t - a.t) / w);
        double z = 0.0;
        for (const auto& a : anchors.anchors) z += std::exp(-std::fabs(t - a.t) / w - mx);
        for (const auto& a : anchors.anchors) {
            double wk = std::exp(-std::fabs(t - a.t) / w - mx) / z;
            cond.at(t, 0) += wk * (a.v - mu) / sd;
            cond.at(t, 1) += wk * a.tau;
        }
    }
    return cond;
}

Tensor NumericReasoner::anchor_embed_row(double v_norm, int tau) const {
    Tensor head = Tensor::from({1, 2}, {v_norm, static_cast<double>(tau)});
    Tensor tail = tanh(anchor_tail_.forward(head));
    return concat({head, tail}, 1);
}

Tensor NumericReasoner::dynamics(const Tensor& u, const Tensor& time_enc, const Tensor& cond) const {
    Tensor x = concat({u, time_enc, cond}, 1);
    return tanh(f2_.forward(tanh(f1_.forward(x))));
}

LatentTrajectory NumericReasoner::integrate(const Tensor& u0, const AnchorSet& anchors,
                                            const PriorBundle& priors, int seq_len, int horizon) const {
    int total = seq_len + horizon;
    if (u0.shape()[0] != total) throw ShapeError("integrate: latent rows must equal L+H");
    Tensor time_enc = time_encoding(total, priors);
    Matrix cond_m = anchor_conditioning(anchors, priors, total);
    Tensor cond = Tensor::from({total, 2}, cond_m.v);

    // Anchor pull: rows at anchor times move toward anchor-implied latents.
    std::function<Tensor(Tensor)> post_step;
    if (!anchors.anchors.empty() && cfg_.anchor_pull > 0.0) {
        double mu = signal::mean_of(priors.mean_channel);
        double sd = std::max(signal::std_of(priors.mean_channel), 1e-8);
        std::vector<Tensor> rows;
        std::vector<double> mask_data(static_cast<std::size_t>(total), 0.0);
        Tensor targets = Tensor::zeros({total, cfg_.hidden_dim});
        {
            std::vector<Tensor> parts;
            int prev = 0;
            for (const auto& a : anchors.anchors) {
                if (a.t < 0 || a.t >= total) continue;
                if (a.t > prev) parts.push_back(Tensor::zeros({a.t - prev, cfg_.hidden_dim}));
                parts.push_back(anchor_embed_row((a.v - mu) / sd, a.tau));
                mask_data[static_cast<std::size_t>(a.t)] = cfg_.anchor_pull;
                prev = a.t + 1;
            }
            if (prev < total) parts.push_back(Tensor::zeros({total - prev, cfg_.hidden_dim}));
            targets = concat(parts, 0);
        }
        Tensor pull = Tensor::from({total, 1}, mask_data);
        Tensor keep = sub(Tensor::scalar(1.0), pull);
        post_step = [pull, keep, targets](Tensor u) {
            return add(mul(keep, u), mul(pull, targets));
        };
    }

    auto f = [this, &time_enc, &cond](const Tensor& u) { return dynamics(u, time_enc, cond); };
    int n_steps = cfg_.steps();
    LatentTrajectory traj;
    traj.states = rk4_integrate(u0, f, cfg_.step_size, n_steps, post_step);
    traj.steps_used = n_steps;
    traj.strategy = CompletionStrategy::Ode;
    traj.decoded = decode(traj.states, priors);
    return traj;
}

LatentTrajectory NumericReasoner::complete(const Tensor& u0, const AnchorSet& anchors,
                                           const PriorBundle& priors, int seq_len, int horizon,
                                           CompletionStrategy strategy) const {
    if (strategy == CompletionStrategy::Ode) return integrate(u0, anchors, priors, seq_len, horizon);

    int total = seq_len + horizon;
    LatentTrajectory traj;
    traj.strategy = strategy;
    traj.steps_used = 0;

    if (strategy == CompletionStrategy::Repeat || horizon == 0) {
        traj.states = u0;  // init_latent already repeats row L-1 over the horizon
        traj.decoded = decode(traj.states, priors);
        return traj;
    }

    // Interpolation nodes: the boundary latent row at L-1 plus anchor-embedded
    // rows inside the horizon.
    double mu = signal::mean_of(priors.mean_channel);
    double sd = std::max(signal::std_of(priors.mean_channel), 1e-8);
    struct Node {
        int t;
        Tensor row;
    };
    std::vector<Node> nodes;
    nodes.push_back({seq_len - 1, slice(u0, 0, seq_len - 1, seq_len)});
    for (const auto& a : anchors.anchors) {
        if (a.t < seq_len || a.t >= total) continue;
        nodes.push_back({a.t, anchor_embed_row((a.v - mu) / sd, a.tau)});
    }

    bool quadratic = strategy == CompletionStrategy::Quadratic;
    if (quadratic && nodes.size() < 3) {
        quadratic = false;
        traj.quadratic_fell_back = true;
    }

    auto row_at = [&](int t) -> Tensor {
        // nodes are sorted by construction (anchors strictly increasing)
        std::size_t seg = 0;
        while (seg + 1 < nodes.size() && nodes[seg + 1].t <= t) ++seg;
        if (seg + 1 >= nodes.size()) return nodes.back().row;  // beyond last node: hold
        const Node& a = nodes[seg];
        const Node& b = nodes[seg + 1];
        double u = static_cast<double>(t - a.t) / (b.t - a.t);
        if (!quadratic) {
            return add(mul(Tensor::scalar(1.0 - u), a.row), mul(Tensor::scalar(u), b.row));
        }
        // Three-point Lagrange fit on (a, b, c) or (p, a, b) at the tail.
        const Node* n0;
        const Node* n1;
        const Node* n2;
        if (seg + 2 < nodes.size()) {
            n0 = &nodes[seg];
            n1 = &nodes[seg + 1];
            n2 = &nodes[seg + 2];
        } else {
            n0 = &nodes[seg - 1];
            n1 = &nodes[seg];
            n2 = &nodes[seg + 1];
        }
        double x = t, x0 = n0->t, x1 = n1->t, x2 = n2->t;
        double w0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
        double w1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
        double w2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
        return add(add(mul(Tensor::scalar(w0), n0->row), mul(Tensor::scalar(w1), n1->row)),
                   mul(Tensor::scalar(w2), n2->row));
    };

    std::vector<Tensor> parts{slice(u0, 0, 0, seq_len)};
    for (int t = seq_len; t < total; ++t) parts.push_back(row_at(t));
    traj.states = concat(parts, 0);
    traj.decoded = decode(traj.states, priors);
    return traj;
}

std::vector<double> NumericReasoner::decode(const Tensor& states, const PriorBundle& priors) const {
    double mu = signal::mean_of(priors.mean_channel);
    double sd = std::max(signal::std_of(priors.mean_channel), 1e-8);
    int n = states.shape()[0];
    int dh = states.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) out[static_cast<std::size_t>(t)] = states.data()[static_cast<std::size_t>(t) * dh] * sd + mu;
    return out;
}

FusedRepresentation NumericReasoner::fuse(const Tensor& embedding, const LatentTrajectory& traj,
                                          int seq_len, int horizon, bool numeric_enabled) const {
    int total = seq_len + horizon;
    Tensor e_ext = horizon > 0 ? concat({embedding, Tensor::zeros({horizon, d_model_})}, 0) : embedding;

    FusedRepresentation out;
    if (!numeric_enabled) {
        out.Z = add(e_ext, fuse_attn_.forward(e_ext, e_ext));
        out.gate_values.assign(static_cast<std::size_t>(total), 1.0);
        return out;
    }
    if (traj.states.shape()[0] != total) throw ShapeError("fuse: trajectory rows must equal L+H");

    Tensor back = proj_back_.forward(traj.states);
    Tensor g = sigmoid(gate_.forward(concat({e_ext, back}, 1)));  // (L+H) x 1
    Tensor fused = add(mul(g, e_ext), mul(sub(Tensor::scalar(1.0), g), back));
    out.Z = add(fused, fuse_attn_.forward(fused, fused));
    out.gate_values.resize(static_cast<std::size_t>(total));
    for (int t = 0; t < total; ++t) out.gate_values[static_cast<std::size_t>(t)] = g.data()[static_cast<std::size_t>(t)];
    return out;
}

} // namespace tsa
