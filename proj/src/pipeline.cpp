#include "tsagent/pipeline.hpp"

#include "tsagent/signal.hpp"

#include <algorithm>
#include <cmath>

namespace tsa {

namespace {

EngineConfig harmonized(EngineConfig cfg) {
    cfg.coord.shared_memory = cfg.ablation.enable_shared_memory;
    cfg.coord.gated_attention = cfg.ablation.enable_gated_attention;
    cfg.coord.lambda_com = cfg.lambda_com;
    cfg.coord.d_h = cfg.ode.hidden_dim;
    cfg.ode.strategy = cfg.ablation.completion_strategy;
    cfg.tools.seq_len = cfg.seq_len;
    cfg.tools.horizon = cfg.horizon;
    cfg.tools.channels = cfg.channels;
    cfg.tools.classes = cfg.classes;
    cfg.tools.d_model_fused = cfg.coord.d_model;
    return cfg;
}

Rng engine_rng(const EngineConfig& cfg) { return Rng::fork(cfg.seed, 0x656e67); }

} // namespace

int predicted_label(const Tensor& logits) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(logits.size()); ++c)
        if (logits.at(c) > logits.at(best)) best = c;
    return best;
}

Engine::Engine(const EngineConfig& cfg)
    : cfg_(harmonized(cfg)),
      ps_(),
      rng_init_(engine_rng(cfg_)),
      coord_(ps_, cfg_.coord, cfg_.seq_len, cfg_.channels, rng_init_),
      numeric_(ps_, cfg_.coord.d_model, cfg_.ode, rng_init_),
      tools_([&] {
          ToolRegistry reg = build_registry(ps_, cfg_.tools, cfg_.task, rng_init_);
          reg.apply_availability(cfg_.tool_availability);
          return reg;
      }()),
      chains_(ChainRegistry::defaults(cfg_.task, tools_, cfg_.ablation.enable_tools)),
      router_(ps_, cfg_.router, cfg_.coord.d_m, static_cast<int>(chains_.size()), rng_init_) {}

AnchorSet Engine::anchors_for(const TimeSeriesWindow& window, const PriorBundle& priors,
                              std::uint64_t window_id, bool& from_oracle) {
    from_oracle = true;
    if (!cfg_.ablation.enable_visual_reasoner) {
        AnchorSet empty;
        empty.task = cfg_.task;
        empty.confidence = 0.0;
        return empty;
    }
    auto cached = anchor_cache_.find(window_id);
    if (cached != anchor_cache_.end()) {
        from_oracle = cached->second.from_oracle;
        return cached->second.set;
    }

    AnchorSet result = fetch_anchors(window, priors, from_oracle);
    anchor_cache_[window_id] = {result, from_oracle};
    return result;
}

AnchorSet Engine::fetch_anchors(const TimeSeriesWindow& window, const PriorBundle& priors,
                                bool& from_oracle) const {
    AnchorSet result;
    from_oracle = true;
    auto range = default_anchor_range(cfg_.task);
    if (cfg_.anchor_source == AnchorSource::Vlm) {
        try {
            VlmRequest req = build_prompt(cfg_.task, window, priors, range);
            req.endpoint = cfg_.vlm.endpoint;
            req.model_id = cfg_.vlm.model_id;
            req.api_key = cfg_.vlm.api_key;
            req.timeout_ms = cfg_.vlm.timeout_ms;
            req.max_retries = cfg_.vlm.max_retries;
            req.backoff_ms = cfg_.vlm.backoff_ms;
            PlotImage img = render_plot(window, priors, cfg_.plot);
            req.image_png_b64 = base64_encode(img.png);
            std::string raw = query_vlm(req);
            result = parse_anchor_response(raw, cfg_.task, WindowContext::from(window, priors),
                                           cfg_.anchor_limits);
            from_oracle = false;
            if (static_cast<int>(result.anchors.size()) < range.first)
                result.warning = "response holds " + std::to_string(result.anchors.size()) +
                                 " anchors, below the suggested minimum " + std::to_string(range.first);
        } catch (const LowConfidenceError&) {
            result = offline_anchor_oracle(window, priors, cfg_.task, range);
        } catch (const ParseError&) {
            result = offline_anchor_oracle(window, priors, cfg_.task, range);
        } catch (const SchemaError&) {
            result = offline_anchor_oracle(window, priors, cfg_.task, range);
        }
        // TransportError/EndpointError propagate: the run must surface a dead endpoint.
    } else {
        result = offline_anchor_oracle(window, priors, cfg_.task, range);
    }
    return result;
}

void Engine::warm_anchor_cache_bulk(const std::vector<TimeSeriesWindow>& windows,
                                    const std::vector<std::size_t>& indices) {
    if (!cfg_.ablation.enable_visual_reasoner) return;
    std::vector<std::size_t> missing;
    for (std::size_t idx : indices)
        if (!anchor_cache_.count(idx)) missing.push_back(idx);
    int n = static_cast<int>(missing.size());
    int threads = cfg_.anchor_source == AnchorSource::Vlm
                      ? std::max(1, cfg_.max_concurrent_requests)
                      : 1;
    std::string first_error;
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
    for (int i = 0; i < n; ++i) {
        std::size_t idx = missing[static_cast<std::size_t>(i)];
        try {
            PriorBundle priors = compute_statistics(windows[idx], cfg_.analyzer);
            bool from_oracle = true;
            AnchorSet set = fetch_anchors(windows[idx], priors, from_oracle);
#pragma omp critical(tsa_anchor_cache)
            anchor_cache_[idx] = {std::move(set), from_oracle};
        } catch (const std::exception& e) {
#pragma omp critical(tsa_anchor_error)
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) throw TransportError(first_error);
}

void Engine::warm_anchor_cache(const TimeSeriesWindow& window, std::uint64_t window_id) {
    if (!cfg_.ablation.enable_visual_reasoner) return;
    if (anchor_cache_.count(window_id)) return;
    PriorBundle priors = compute_statistics(window, cfg_.analyzer);
    bool from_oracle = true;
    anchors_for(window, priors, window_id, from_oracle);
}

Tensor Engine::task_loss(const VerifiedPrediction& pred, const ToolValue* raw,
                         const TimeSeriesWindow& window) const {
    switch (cfg_.task) {
        case Task::Forecast: {
            if (!window.target) throw ContractError("forecast window has no target");
            Tensor target = Tensor::from({window.target->rows, window.target->cols}, window.target->v);
            return mean(power(sub(pred.value, target), 2.0));
        }
        case Task::Impute: {
            if (!window.mask || !window.truth) throw ContractError("imputation window has no mask/truth");
            int L = window.length(), D = window.channels();
            std::vector<double> m(static_cast<std::size_t>(L) * D, 0.0);
            double count = 0.0;
            for (int t = 0; t < L; ++t)
                for (int d = 0; d < D; ++d)
                    if (window.is_masked(t, d)) {
                        m[static_cast<std::size_t>(t) * D + d] = 1.0;
                        count += 1.0;
                    }
            if (count == 0.0) return Tensor::scalar(0.0);
            Tensor mask = Tensor::from({L, D}, std::move(m));
            Tensor truth = Tensor::from({L, D}, window.truth->v);
            Tensor err = mul(mask, power(sub(pred.value, truth), 2.0));
            return mul(sum(err), Tensor::scalar(1.0 / count));
        }
        case Task::Classify: {
            if (!window.label) throw ContractError("classification window has no label");
            Tensor probs = softmax(pred.value);
            int label = std::clamp(*window.label, 0, pred.value.shape()[1] - 1);
            Tensor p = slice(probs, 1, label, label + 1);
            return mul(log(add(p, Tensor::scalar(1e-12))), Tensor::scalar(-1.0));
        }
        case Task::Detect: {
            if (raw && raw->objective) return *raw->objective;
            // rule-based chain: constant objective, no gradient
            return Tensor::scalar(0.0);
        }
    }
    return Tensor::scalar(0.0);
}

WindowResult Engine::run_window(const TimeSeriesWindow& window, std::uint64_t window_id, bool training) {
    window.validate();
    WindowResult res;
    PriorBundle priors = compute_statistics(window, cfg_.analyzer);
    res.anchors = anchors_for(window, priors, window_id, res.anchors_from_oracle);

    int L = window.length(), D = window.channels(), H = cfg_.task == Task::Forecast ? window.horizon : 0;
    std::uint64_t drop_seed = Rng::fork(cfg_.seed, window_id).next();

    // Normalized window tensor feeds the data embedding and the agents.
    std::vector<double> norm_vals(window.values.v);
    {
        for (int d = 0; d < D; ++d) {
            std::vector<double> obs;
            for (int t = 0; t < L; ++t)
                if (!window.is_masked(t, d)) obs.push_back(window.values.at(t, d));
            double mu = signal::mean_of(obs);
            double sd = std::max(signal::std_of(obs), 1e-8);
            for (int t = 0; t < L; ++t) {
                std::size_t i = static_cast<std::size_t>(t) * D + d;
                norm_vals[i] = window.is_masked(t, d) ? 0.0 : (norm_vals[i] - mu) / sd;
            }
        }
    }
    Tensor norm_window = Tensor::from({L, D}, norm_vals);
    Tensor raw_window = Tensor::from({L, D}, window.values.v);

    SharedMemory memory = SharedMemory::init(L, cfg_.coord.d_m, cfg_.ablation.enable_shared_memory);
    Tensor memory_before = memory.read().detach();

    // Analyzer
    AgentState analyzer_state = coord_.agent_forward(AgentId::Analyzer, norm_window, memory);
    coord_.memory_update(memory, analyzer_state, coord_.communicate(analyzer_state, memory));

    // Reasoner: data embedding, anchor-conditioned latent trajectory
    Tensor embedding = coord_.embed_data(norm_window);
    LatentTrajectory traj;
    if (cfg_.ablation.enable_numeric_reasoner) {
        Tensor u0 = numeric_.init_latent(embedding, H);
        traj = numeric_.complete(u0, res.anchors, priors, L, H, cfg_.ablation.completion_strategy);
    } else {
        traj.states = Tensor::zeros({L + H, cfg_.ode.hidden_dim});
        traj.strategy = cfg_.ablation.completion_strategy;
        traj.decoded.assign(static_cast<std::size_t>(L + H), priors.history_mean);
    }
    Matrix cond = numeric_.anchor_conditioning(res.anchors, priors, L + H);
    Matrix cond_obs(L, 2);
    for (int t = 0; t < L; ++t)
        for (int c = 0; c < 2; ++c) cond_obs.at(t, c) = cond.at(t, c);
    Tensor reasoner_carrier = concat({slice(traj.states, 0, 0, L), Tensor::from({L, 2}, cond_obs.v)}, 1);
    AgentState reasoner_state = coord_.agent_forward(AgentId::Reasoner, reasoner_carrier, memory);
    coord_.memory_update(memory, reasoner_state, coord_.communicate(reasoner_state, memory));

    FusedRepresentation fused =
        numeric_.fuse(embedding, traj, L, H, cfg_.ablation.enable_numeric_reasoner);

    // Executor: route, run, verify
    Tensor logits_t = router_.score_logits(cfg_.task, priors, memory, res.anchors.confidence);
    res.routing = router_.decision_from_logits(logits_t.data());

    ToolContext ctx;
    ctx.window = &window;
    ctx.priors = &priors;
    ctx.anchors = &res.anchors;
    ctx.fused = fused.Z;
    ctx.training = training;
    ctx.drop_seed = drop_seed;

    ToolValue input{ValueKind::Series, raw_window, std::nullopt, std::nullopt};
    std::optional<ToolValue> candidate;
    std::vector<ChainStepTrace> trace;
    std::string executed;

    Tensor probs_t = softmax(logits_t);
    if (res.routing.mode == RoutingMode::Greedy) {
        int sel = res.routing.selected[0];
        ChainRun run = run_chain(tools_, chains_.chains()[static_cast<std::size_t>(sel)], input, ctx);
        trace = run.steps;
        executed = run.chain_id;
        if (run.output) {
            candidate = run.output;
            if (training) {
                // straight-through: value unchanged, gradient reaches the router
                Tensor p = slice(probs_t, 1, sel, sel + 1);
                Tensor ratio = mul(p, power(p.detach(), -1.0));
                candidate->tensor = mul(candidate->tensor, ratio);
            }
        }
    } else {
        std::vector<ToolValue> outputs;
        std::vector<int> ok_idx;
        for (int sel : res.routing.selected) {
            ToolContext cctx = ctx;  // chains run independently; fresh pre/post state
            ChainRun run = run_chain(tools_, chains_.chains()[static_cast<std::size_t>(sel)], input, cctx);
            for (auto& s : run.steps) trace.push_back(s);
            if (!executed.empty()) executed += ",";
            executed += run.chain_id;
            if (run.output) {
                outputs.push_back(*run.output);
                ok_idx.push_back(sel);
            }
        }
        if (!outputs.empty()) {
            // differentiable softmax-weighted combination over the surviving chains
            std::vector<Tensor> ws;
            Tensor z = Tensor::scalar(0.0);
            for (int sel : ok_idx) z = add(z, exp(slice(logits_t, 1, sel, sel + 1)));
            Tensor acc;
            std::optional<Tensor> obj_acc;
            for (std::size_t i = 0; i < outputs.size(); ++i) {
                Tensor w = mul(exp(slice(logits_t, 1, ok_idx[i], ok_idx[i] + 1)), power(z, -1.0));
                Tensor term = mul(w, outputs[i].tensor);
                acc = i == 0 ? term : add(acc, term);
                if (outputs[i].objective) {
                    Tensor ot = mul(w, *outputs[i].objective);
                    obj_acc = obj_acc ? add(*obj_acc, ot) : ot;
                }
            }
            candidate = outputs[0];
            candidate->tensor = acc;
            candidate->objective = obj_acc;
            candidate->attention.reset();
        }
    }

    auto recompute = [&]() -> std::optional<ToolValue> {
        ToolContext rctx;
        rctx.window = &window;
        rctx.priors = &priors;
        rctx.anchors = &res.anchors;
        rctx.fused = fused.Z;
        rctx.training = false;  // dropout-free retry
        rctx.drop_seed = drop_seed;
        ChainRun rerun =
            run_chain(tools_, chains_.chains()[static_cast<std::size_t>(res.routing.selected[0])], input, rctx);
        return rerun.output;
    };

    res.prediction = verify(candidate, cfg_.task, res.anchors, priors, window, recompute, cfg_.verifier);
    res.prediction.chain_trace = std::move(trace);
    res.executed_chains = std::move(executed);

    // Executor agent closes the communication round.
    AgentState executor_state =
        coord_.agent_forward(AgentId::Executor, slice(fused.Z, 0, 0, L), memory);
    coord_.memory_update(memory, executor_state, coord_.communicate(executor_state, memory));
    res.memory_log = memory.update_log;

    if (training) {
        Tensor l_task = task_loss(res.prediction, candidate ? &*candidate : nullptr, window);
        Tensor l_com = Coordination::memory_regularizer(memory_before, memory.read());
        res.task_loss = l_task.item();
        res.com_loss = l_com.item();
        res.loss = add(l_task, mul(Tensor::scalar(cfg_.lambda_com), l_com));
    } else {
        res.task_loss = 0.0;
        res.com_loss = 0.0;
    }
    return res;
}

} // namespace tsa
