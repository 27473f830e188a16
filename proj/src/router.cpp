#include "tsagent/router.hpp"

#include "tsagent/signal.hpp"
#include "tsagent/tools_anomaly.hpp"
#include "tsagent/tools_impute.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace tsa {

std::vector<std::string> ChainSpec::full() const {
    std::vector<std::string> out = pre;
    out.insert(out.end(), tools.begin(), tools.end());
    out.insert(out.end(), post.begin(), post.end());
    return out;
}

ChainRegistry::ChainRegistry(Task task, const ToolRegistry& tools, std::vector<ChainSpec> chains)
    : task_(task), chains_(std::move(chains)) {
    if (chains_.empty()) throw RegistryError("chain registry for " + task_name(task) + " is empty");
    for (const auto& c : chains_) {
        if (c.tools.empty() || c.tools.size() > 3)
            throw RegistryError("chain '" + c.chain_id + "' must hold 1..3 core tools");
        tools.validate_chain(c.full(), task);
    }
}

ChainRegistry ChainRegistry::defaults(Task task, const ToolRegistry& tools, bool tools_enabled) {
    auto usable = [&](const ChainSpec& c) {
        for (const auto& id : c.full())
            if (!tools.has(id) || !tools.get(id)->available()) return false;
        return true;
    };
    std::vector<ChainSpec> chains;
    if (!tools_enabled) {
        // Ablation: a single simple head per task.
        switch (task) {
            case Task::Forecast: chains.push_back({"forecast_mlp", {}, {"simple_mlp_forecast"}, {}}); break;
            case Task::Classify: chains.push_back({"classify_mlp", {}, {"simple_mlp_classify"}, {}}); break;
            case Task::Impute: chains.push_back({"impute_mlp", {}, {"simple_mlp_impute"}, {}}); break;
            case Task::Detect: chains.push_back({"detect_mlp", {}, {"simple_mlp_anomaly"}, {}}); break;
        }
        return ChainRegistry(task, tools, std::move(chains));
    }
    switch (task) {
        case Task::Forecast:
            chains.push_back({"forecast_default", {"revin"}, {"patch_transformer_forecast"}, {"revin_inverse"}});
            chains.push_back(
                {"forecast_decomp", {"revin"}, {"decomposition", "patch_transformer_forecast"}, {"revin_inverse"}});
            chains.push_back({"forecast_linear_trend", {}, {"linear_trend_forecast"}, {}});
            break;
        case Task::Classify:
            chains.push_back({"classify_timesblock", {}, {"timesblock_classify"}, {}});
            chains.push_back({"classify_tcn", {}, {"tcn_classify"}, {}});
            break;
        case Task::Impute:
            chains.push_back({"impute_patch", {}, {"patch_transformer_impute"}, {}});
            chains.push_back({"impute_linear", {}, {"linear_interp_impute"}, {}});
            break;
        case Task::Detect:
            chains.push_back({"detect_multiscale", {}, {"multiscale_anomaly"}, {}});
            chains.push_back({"detect_vae", {}, {"vae_anomaly"}, {}});
            chains.push_back({"detect_zscore", {}, {"zscore_anomaly"}, {}});
            break;
    }
    std::vector<ChainSpec> kept;
    for (auto& c : chains)
        if (usable(c)) kept.push_back(std::move(c));
    if (kept.empty()) throw RegistryError("tool manifest leaves no usable chain for " + task_name(task));
    return ChainRegistry(task, tools, std::move(kept));
}

Router::Router(ParamStore& ps, const RouterConfig& cfg, int d_m, int n_chains, Rng& rng)
    : cfg_(cfg), d_m_(d_m), n_chains_(n_chains) {
    int in_dim = 4 + 5 + d_m;
    l1_ = LinearLayer(ps, "router.l1", in_dim, cfg.hidden, rng);
    l2_.w = ps.create_const("router.l2.w", {cfg.hidden, n_chains}, 0.0);
    l2_.b = ps.create_const("router.l2.b", {n_chains}, 0.0);
}

Tensor Router::score_logits(Task task, const PriorBundle& priors, const SharedMemory& memory,
                            double anchor_confidence) const {
    std::vector<double> feat(static_cast<std::size_t>(4 + 5), 0.0);
    feat[static_cast<std::size_t>(task)] = 1.0;
    feat[4] = signal::least_squares_slope(priors.mean_channel);
    feat[5] = priors.periodicity ? priors.periodicity->strength : 0.0;
    feat[6] = priors.mask_ratio;
    feat[7] = priors.history_std;
    feat[8] = anchor_confidence;
    Tensor head = Tensor::from({1, 9}, feat);
    Tensor pooled = mean(memory.read(), 0);  // compressed memory summary, [1 x d_m]
    Tensor x = concat({head, pooled}, 1);
    return l2_.forward(gelu(l1_.forward(x)));
}

RoutingDecision Router::decision_from_logits(const std::vector<double>& logits) const {
    RoutingDecision d;
    d.scores = logits;
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double s : logits) z += std::exp(s - mx);
    d.probabilities.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        d.probabilities[i] = std::exp(logits[i] - mx) / z;

    std::vector<int> order(logits.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return d.probabilities[static_cast<std::size_t>(a)] > d.probabilities[static_cast<std::size_t>(b)];
    });

    double top = d.probabilities[static_cast<std::size_t>(order[0])];
    if (top >= cfg_.greedy_threshold) {
        d.mode = RoutingMode::Greedy;
        d.ensemble_k = 1;
        d.selected = {order[0]};
        d.ensemble_weights = {1.0};
    } else {
        d.mode = RoutingMode::Ensemble;
        d.ensemble_k = std::min<int>(cfg_.max_ensemble, static_cast<int>(logits.size()));
        d.selected.assign(order.begin(), order.begin() + d.ensemble_k);
        double wz = 0.0;
        for (int idx : d.selected) wz += std::exp(logits[static_cast<std::size_t>(idx)] - mx);
        for (int idx : d.selected)
            d.ensemble_weights.push_back(std::exp(logits[static_cast<std::size_t>(idx)] - mx) / wz);
    }
    return d;
}

RoutingDecision Router::score_chains(Task task, const PriorBundle& priors, const SharedMemory& memory,
                                     double anchor_confidence) const {
    if (n_chains_ == 0) throw RegistryError("router has no candidate chains");
    Tensor logits = score_logits(task, priors, memory, anchor_confidence);
    return decision_from_logits(logits.data());
}

ChainRun run_chain(const ToolRegistry& tools, const ChainSpec& chain, const ToolValue& input,
                   ToolContext& ctx) {
    ChainRun run;
    run.chain_id = chain.chain_id;
    ToolValue value = input;
    for (const auto& id : chain.full()) {
        auto tool = tools.get(id);
        auto t0 = std::chrono::steady_clock::now();
        std::size_t notes_before = ctx.notes.size();
        try {
            value = tool->run(value, ctx);
        } catch (const NumericError& e) {
            ChainStepTrace step;
            step.tool_id = id;
            step.note = std::string("aborted: ") + e.what();
            run.steps.push_back(std::move(step));
            run.error = "tool '" + id + "' failed: " + e.what();
            return run;
        }
        ChainStepTrace step;
        step.tool_id = id;
        step.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        for (std::size_t i = notes_before; i < ctx.notes.size(); ++i) {
            if (!step.note.empty()) step.note += "; ";
            step.note += ctx.notes[i];
        }
        if (value.kind == ValueKind::Horizon && ctx.pending_trend) {
            value.tensor = add(value.tensor, *ctx.pending_trend);
            ctx.pending_trend.reset();
            step.note += step.note.empty() ? "trend restored" : "; trend restored";
        }
        run.steps.push_back(std::move(step));
    }
    run.output = std::move(value);
    return run;
}

ToolValue ensemble(const std::vector<ToolValue>& results, const std::vector<double>& scores) {
    if (results.empty()) throw ContractError("ensemble of zero results");
    if (results.size() != scores.size()) throw ContractError("ensemble: results/scores size mismatch");
    const Shape& shape = results[0].tensor.shape();
    for (const auto& r : results)
        if (r.tensor.shape() != shape)
            throw ShapeError("ensemble: member shape " + shape_str(r.tensor.shape()) +
                             " differs from " + shape_str(shape));
    double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    Tensor acc = Tensor::zeros(shape);
    for (std::size_t i = 0; i < results.size(); ++i) {
        double w = std::exp(scores[i] - mx) / z;
        acc = add(acc, mul(Tensor::scalar(w), results[i].tensor));
    }
    ToolValue out = results[0];
    out.tensor = acc;
    out.attention.reset();
    return out;
}

namespace {

struct ExpectedShape {
    int rows, cols;
};

ExpectedShape expected_shape(Task task, const TimeSeriesWindow& w) {
    switch (task) {
        case Task::Forecast: return {w.horizon, w.channels()};
        case Task::Impute: return {w.length(), w.channels()};
        case Task::Classify: return {1, -1};  // cols checked by the head config
        case Task::Detect: return {w.length(), 1};
    }
    return {0, 0};
}

Tensor coerce_shape(Tensor value, int rows, int cols, std::vector<std::string>& corrections) {
    if (value.shape().size() != 2) {
        value = reshape(value, {static_cast<int>(value.size()), 1});
        corrections.push_back("reshaped to 2-D");
    }
    int have_rows = value.shape()[0], have_cols = value.shape()[1];
    if (cols > 0 && have_cols != cols) {
        if (have_cols > cols) {
            value = slice(value, 1, 0, cols);
            corrections.push_back("truncated columns " + std::to_string(have_cols) + "->" + std::to_string(cols));
        } else {
            Tensor last = slice(value, 1, have_cols - 1, have_cols);
            std::vector<Tensor> parts{value};
            for (int i = have_cols; i < cols; ++i) parts.push_back(last);
            value = concat(parts, 1);
            corrections.push_back("padded columns by repeating the last");
        }
    }
    if (rows > 0 && value.shape()[0] != rows) {
        have_rows = value.shape()[0];
        if (have_rows > rows) {
            value = slice(value, 0, 0, rows);
            corrections.push_back("truncated rows " + std::to_string(have_rows) + "->" + std::to_string(rows));
        } else {
            Tensor last = slice(value, 0, have_rows - 1, have_rows);
            std::vector<Tensor> parts{value};
            for (int i = have_rows; i < rows; ++i) parts.push_back(last);
            value = concat(parts, 0);
            corrections.push_back("padded rows by repeating the last");
        }
    }
    return value;
}

bool all_finite(const Tensor& t) {
    for (double v : t.data())
        if (!std::isfinite(v)) return false;
    return true;
}

// Rule-based per-task fallback predictions.
Tensor fallback_value(Task task, const TimeSeriesWindow& w, int classes_hint) {
    switch (task) {
        case Task::Forecast: {
            int H = w.horizon, D = w.channels();
            std::vector<double> out(static_cast<std::size_t>(H) * D);
            for (int d = 0; d < D; ++d) {
                double last = 0.0;
                for (int t = w.length() - 1; t >= 0; --t)
                    if (!w.is_masked(t, d)) {
                        last = w.values.at(t, d);
                        break;
                    }
                for (int h = 0; h < H; ++h) out[static_cast<std::size_t>(h) * D + d] = last;
            }
            return Tensor::from({H, D}, std::move(out));
        }
        case Task::Impute: {
            Matrix filled = LinearInterpImpute::interpolate(w);
            return Tensor::from({filled.rows, filled.cols}, filled.v);
        }
        case Task::Classify: {
            int n_classes = std::max(classes_hint, 1);
            std::vector<double> logits(static_cast<std::size_t>(n_classes), 0.0);
            logits[0] = 1.0;  // conservative: the zero class
            return Tensor::from({1, n_classes}, std::move(logits));
        }
        case Task::Detect: {
            auto s = ZScoreAnomaly::scores_for(w);
            return Tensor::from({static_cast<int>(s.size()), 1}, s);
        }
    }
    return Tensor::zeros({1});
}

// Piecewise-linear anchor envelope center at each step of [t0, t0+rows).
std::vector<double> anchor_envelope_center(const AnchorSet& anchors, int t0, int rows) {
    std::vector<double> center(static_cast<std::size_t>(rows), 0.0);
    const auto& as = anchors.anchors;
    for (int i = 0; i < rows; ++i) {
        int t = t0 + i;
        const Anchor* prev = nullptr;
        const Anchor* next = nullptr;
        for (const auto& a : as) {
            if (a.t <= t) prev = &a;
            if (a.t >= t && !next) next = &a;
        }
        double v;
        if (prev && next && next->t != prev->t) {
            double frac = static_cast<double>(t - prev->t) / (next->t - prev->t);
            v = prev->v * (1 - frac) + next->v * frac;
        } else if (prev) {
            v = prev->v;
        } else if (next) {
            v = next->v;
        } else {
            v = 0.0;
        }
        center[static_cast<std::size_t>(i)] = v;
    }
    return center;
}

} // namespace

VerifiedPrediction verify(std::optional<ToolValue> candidate, Task task, const AnchorSet& anchors,
                          const PriorBundle& priors, const TimeSeriesWindow& window,
                          const std::function<std::optional<ToolValue>()>& recompute,
                          const VerifierConfig& cfg) {
    VerifiedPrediction out;
    out.kind = required_output_kind(task);
    ExpectedShape want = expected_shape(task, window);

    int classes_hint = candidate && candidate->tensor.shape().size() == 2 ? candidate->tensor.shape()[1] : 2;
    auto fallback = [&](const std::string& why) {
        out.fallback_used = true;
        out.corrections.push_back("fallback: " + why);
        return fallback_value(task, window, classes_hint);
    };

    // Non-finite values are resolved before any shape surgery: the graph
    // primitives reject NaN/Inf by contract, so coercion only sees finite data.
    Tensor value;
    if (!candidate) {
        value = fallback("chain produced no output");
    } else {
        Tensor raw = candidate->tensor;
        if (!all_finite(raw)) {
            bool fixed = false;
            if (recompute) {
                auto again = recompute();
                if (again && all_finite(again->tensor)) {
                    raw = again->tensor;
                    out.corrections.push_back("recomputed after non-finite output");
                    fixed = true;
                }
            }
            if (!fixed) {
                value = fallback("non-finite values persisted");
                raw = Tensor();
            }
        }
        // (i) format and shape correction
        if (raw.defined()) value = coerce_shape(raw, want.rows, want.cols, out.corrections);
    }

    // (ii) constraint validation
    if ((task == Task::Forecast || task == Task::Impute) && !anchors.anchors.empty()) {
        int rows = value.shape()[0], cols = value.shape()[1];
        int t0 = task == Task::Forecast ? window.length() : 0;
        auto center = anchor_envelope_center(anchors, t0, rows);
        double band = cfg.bound_sigma * priors.history_std;
        double margin = std::max(cfg.margin_factor * priors.history_std, 1e-8);

        std::vector<double> hi_b(value.data().size()), lo_b(value.data().size());
        std::vector<double> mask_hi(value.data().size(), 0.0), mask_lo(value.data().size(), 0.0);
        bool any = false;
        for (int r = 0; r < rows; ++r) {
            double hi = center[static_cast<std::size_t>(r)] + band;
            double lo = center[static_cast<std::size_t>(r)] - band;
            for (int c = 0; c < cols; ++c) {
                std::size_t i = static_cast<std::size_t>(r) * cols + c;
                hi_b[i] = hi;
                lo_b[i] = lo;
                double v = value.data()[i];
                if (v > hi + margin) {
                    mask_hi[i] = 1.0;
                    any = true;
                } else if (v < lo - margin) {
                    mask_lo[i] = 1.0;
                    any = true;
                }
            }
        }
        if (any) {
            Shape s = value.shape();
            Tensor hi_t = Tensor::from(s, hi_b);
            Tensor lo_t = Tensor::from(s, lo_b);
            Tensor mh = Tensor::from(s, mask_hi);
            Tensor ml = Tensor::from(s, mask_lo);
            Tensor m = Tensor::scalar(margin);
            Tensor inv_m = Tensor::scalar(1.0 / margin);
            // y <- bound + tanh((y - bound)/margin) * margin on violating cells
            Tensor proj_hi = add(hi_t, mul(tanh(mul(sub(value, hi_t), inv_m)), m));
            Tensor proj_lo = add(lo_t, mul(tanh(mul(sub(value, lo_t), inv_m)), m));
            Tensor keep = sub(sub(Tensor::scalar(1.0), mh), ml);
            value = add(add(mul(keep, value), mul(mh, proj_hi)), mul(ml, proj_lo));
            out.corrections.push_back("projected values onto the anchor envelope");
        }
    }

    // (iii) task-specific normalization
    if (task == Task::Detect) {
        bool any_negative = false;
        for (double v : value.data()) any_negative = any_negative || v < 0.0;
        if (any_negative) {
            value = relu(value);
            out.corrections.push_back("clipped negative anomaly scores");
        }
    }
    if (task == Task::Classify && !all_finite(value)) value = fallback("invalid class logits");

    // For imputation, observed cells always pass through from the window.
    if (task == Task::Impute && window.mask) {
        value = merge_imputation(Tensor::from({window.length(), window.channels()}, window.values.v),
                                 value, window);
    }

    out.value = value;
    return out;
}

} // namespace tsa
