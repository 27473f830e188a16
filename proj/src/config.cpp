#include "tsagent/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

namespace tsa {

using nlohmann::json;

namespace {

// Rejects keys outside the allowed set, naming the offending path.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key '" + (path.empty() ? it.key() : path + "." + it.key()) + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj[key].get<T>();
}

} // namespace

RunConfig parse_run_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;
    check_keys(doc, {"task", "seed", "output_dir", "workers", "data", "anchors", "ode", "model",
                     "router", "verifier", "analyzer", "ablation", "training", "plot", "checkpoint",
                     "tools", "detect"},
               "");

    if (doc.contains("task")) cfg.task = task_from_string(doc["task"].get<std::string>());
    read(doc, "seed", cfg.seed);
    read(doc, "output_dir", cfg.output_dir);
    read(doc, "workers", cfg.workers);
    read(doc, "checkpoint", cfg.checkpoint);
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");

    if (doc.contains("data")) {
        const json& d = doc["data"];
        check_keys(d, {"source", "path", "synthetic", "seq_len", "pred_len", "mask_ratio", "split",
                       "normalization"},
                   "data");
        read(d, "source", cfg.source);
        if (cfg.source != "synthetic" && cfg.source != "file")
            throw ConfigError("data.source must be 'synthetic' or 'file'");
        read(d, "path", cfg.path);
        read(d, "seq_len", cfg.seq_len);
        read(d, "pred_len", cfg.pred_len);
        read(d, "mask_ratio", cfg.mask_ratio);
        if (d.contains("normalization")) {
            cfg.normalization = d["normalization"].get<std::string>();
            norm_strategy_from_string(cfg.normalization);  // validate
        }
        if (d.contains("split")) {
            check_keys(d["split"], {"train", "val", "test"}, "data.split");
            read(d["split"], "train", cfg.split.train);
            read(d["split"], "val", cfg.split.val);
            read(d["split"], "test", cfg.split.test);
        }
        if (d.contains("synthetic")) {
            const json& s = d["synthetic"];
            check_keys(s, {"kind", "length", "channels", "period", "amplitude", "trend", "noise",
                           "level", "spike_every", "spike_from", "n_windows"},
                       "data.synthetic");
            read(s, "kind", cfg.synthetic.kind);
            synth_kind_from_string(cfg.synthetic.kind);  // validate
            read(s, "length", cfg.synthetic.length);
            read(s, "channels", cfg.synthetic.channels);
            read(s, "period", cfg.synthetic.period);
            read(s, "amplitude", cfg.synthetic.amplitude);
            read(s, "trend", cfg.synthetic.trend);
            read(s, "noise", cfg.synthetic.noise);
            read(s, "level", cfg.synthetic.level);
            read(s, "spike_every", cfg.synthetic.spike_every);
            read(s, "spike_from", cfg.synthetic.spike_from);
            read(s, "n_windows", cfg.synthetic.n_windows);
        }
    }

    if (doc.contains("anchors")) {
        const json& a = doc["anchors"];
        check_keys(a, {"source", "endpoint_env", "api_key_env", "model_id", "timeout_ms",
                       "max_retries", "max_concurrent_requests", "max_anchors",
                       "confidence_threshold"},
                   "anchors");
        if (a.contains("source")) {
            std::string s = a["source"].get<std::string>();
            if (s == "offline") cfg.anchor_source = AnchorSource::Offline;
            else if (s == "vlm") cfg.anchor_source = AnchorSource::Vlm;
            else throw ConfigError("anchors.source must be 'offline' or 'vlm'");
        }
        read(a, "endpoint_env", cfg.endpoint_env);
        read(a, "api_key_env", cfg.api_key_env);
        read(a, "model_id", cfg.model_id);
        read(a, "timeout_ms", cfg.vlm_timeout_ms);
        read(a, "max_retries", cfg.vlm_max_retries);
        read(a, "max_concurrent_requests", cfg.max_concurrent_requests);
        read(a, "max_anchors", cfg.anchor_limits.max_anchors);
        read(a, "confidence_threshold", cfg.anchor_limits.confidence_threshold);
    }

    if (doc.contains("ode")) {
        const json& o = doc["ode"];
        check_keys(o, {"hidden_dim", "ode_step", "ode_max_steps", "completion_strategy",
                       "anchor_pull", "kernel_bandwidth"},
                   "ode");
        read(o, "hidden_dim", cfg.ode.hidden_dim);
        read(o, "ode_step", cfg.ode.step_size);
        read(o, "ode_max_steps", cfg.ode.max_steps);
        read(o, "anchor_pull", cfg.ode.anchor_pull);
        read(o, "kernel_bandwidth", cfg.ode.kernel_bandwidth);
        if (o.contains("completion_strategy"))
            cfg.ablation.completion_strategy =
                completion_from_string(o["completion_strategy"].get<std::string>());
    }

    if (doc.contains("model")) {
        const json& m = doc["model"];
        check_keys(m, {"d_model", "d_memory", "classes", "patch_len", "stride", "e_layers",
                       "n_heads", "d_ff", "dropout"},
                   "model");
        read(m, "d_model", cfg.d_model);
        read(m, "d_memory", cfg.d_memory);
        read(m, "classes", cfg.classes);
        read(m, "patch_len", cfg.patch.patch_len);
        read(m, "stride", cfg.patch.stride);
        read(m, "e_layers", cfg.e_layers);
        read(m, "n_heads", cfg.heads);
        read(m, "d_ff", cfg.d_ff);
        read(m, "dropout", cfg.dropout);
    }

    if (doc.contains("router")) {
        const json& r = doc["router"];
        check_keys(r, {"greedy_threshold", "max_ensemble", "hidden"}, "router");
        read(r, "greedy_threshold", cfg.router.greedy_threshold);
        read(r, "max_ensemble", cfg.router.max_ensemble);
        read(r, "hidden", cfg.router.hidden);
    }

    if (doc.contains("verifier")) {
        const json& v = doc["verifier"];
        check_keys(v, {"bound_sigma", "margin_factor"}, "verifier");
        read(v, "bound_sigma", cfg.verifier.bound_sigma);
        read(v, "margin_factor", cfg.verifier.margin_factor);
    }

    if (doc.contains("analyzer")) {
        const json& a = doc["analyzer"];
        check_keys(a, {"top_k", "trending_factor", "periodic_strength", "volatile_factor"}, "analyzer");
        read(a, "top_k", cfg.analyzer.top_k);
        read(a, "trending_factor", cfg.analyzer.trending_factor);
        read(a, "periodic_strength", cfg.analyzer.periodic_strength);
        read(a, "volatile_factor", cfg.analyzer.volatile_factor);
    }

    if (doc.contains("ablation")) {
        const json& a = doc["ablation"];
        check_keys(a, {"enable_visual_reasoner", "enable_numeric_reasoner", "enable_shared_memory",
                       "enable_gated_attention", "enable_tools", "completion_strategy"},
                   "ablation");
        read(a, "enable_visual_reasoner", cfg.ablation.enable_visual_reasoner);
        read(a, "enable_numeric_reasoner", cfg.ablation.enable_numeric_reasoner);
        read(a, "enable_shared_memory", cfg.ablation.enable_shared_memory);
        read(a, "enable_gated_attention", cfg.ablation.enable_gated_attention);
        read(a, "enable_tools", cfg.ablation.enable_tools);
        if (a.contains("completion_strategy"))
            cfg.ablation.completion_strategy =
                completion_from_string(a["completion_strategy"].get<std::string>());
    }

    cfg.training = TrainConfig::defaults(cfg.task);
    cfg.training.seed = cfg.seed;
    if (doc.contains("training")) {
        const json& t = doc["training"];
        check_keys(t, {"lr", "batch_size", "epochs", "lambda_com", "patience"}, "training");
        read(t, "lr", cfg.training.lr);
        read(t, "batch_size", cfg.training.batch_size);
        read(t, "epochs", cfg.training.epochs);
        read(t, "lambda_com", cfg.training.lambda_com);
        read(t, "patience", cfg.training.patience);
        cfg.training_explicit = true;
    }
    if (cfg.training.lr <= 0) throw ConfigError("training.lr must be positive");
    if (cfg.training.patience < 1) throw ConfigError("training.patience must be >= 1");

    if (doc.contains("plot")) {
        const json& p = doc["plot"];
        check_keys(p, {"width", "height", "channels", "show_mask_markers"}, "plot");
        read(p, "width", cfg.plot.width);
        read(p, "height", cfg.plot.height);
        read(p, "show_mask_markers", cfg.plot.show_mask_markers);
        if (p.contains("channels")) cfg.plot.channels = p["channels"].get<std::vector<int>>();
    }

    if (doc.contains("tools")) {
        const json& t = doc["tools"];
        check_keys(t, {"available"}, "tools");
        if (t.contains("available")) {
            for (auto it = t["available"].begin(); it != t["available"].end(); ++it)
                cfg.tool_availability[it.key()] = it.value().get<bool>();
        }
    }

    if (doc.contains("detect")) {
        const json& d = doc["detect"];
        check_keys(d, {"threshold_percentile"}, "detect");
        read(d, "threshold_percentile", cfg.detect_threshold_percentile);
    }

    if (cfg.source == "file" && cfg.path.empty())
        throw ConfigError("data.path is required when data.source is 'file'");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    json doc = json::parse(is, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
    return parse_run_config(doc);
}

json RunConfig::snapshot() const {
    json j;
    j["task"] = task_name(task);
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["workers"] = workers;
    j["data"] = {{"source", source},
                 {"path", path},
                 {"seq_len", seq_len},
                 {"pred_len", pred_len},
                 {"mask_ratio", mask_ratio},
                 {"normalization", normalization},
                 {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}}},
                 {"synthetic",
                  {{"kind", synthetic.kind},
                   {"length", synthetic.length},
                   {"channels", synthetic.channels},
                   {"period", synthetic.period},
                   {"amplitude", synthetic.amplitude},
                   {"trend", synthetic.trend},
                   {"noise", synthetic.noise},
                   {"level", synthetic.level},
                   {"spike_every", synthetic.spike_every},
                   {"n_windows", synthetic.n_windows}}}};
    j["anchors"] = {{"source", anchor_source == AnchorSource::Offline ? "offline" : "vlm"},
                    {"model_id", model_id},
                    {"max_anchors", anchor_limits.max_anchors},
                    {"confidence_threshold", anchor_limits.confidence_threshold}};
    j["ode"] = {{"hidden_dim", ode.hidden_dim},
                {"ode_step", ode.step_size},
                {"ode_max_steps", ode.max_steps},
                {"anchor_pull", ode.anchor_pull},
                {"kernel_bandwidth", ode.kernel_bandwidth},
                {"completion_strategy", completion_name(ablation.completion_strategy)}};
    j["model"] = {{"d_model", d_model},      {"d_memory", d_memory}, {"classes", classes},
                  {"patch_len", patch.patch_len}, {"stride", patch.stride},  {"e_layers", e_layers},
                  {"n_heads", heads},        {"d_ff", d_ff},         {"dropout", dropout}};
    j["router"] = {{"greedy_threshold", router.greedy_threshold},
                   {"max_ensemble", router.max_ensemble},
                   {"hidden", router.hidden}};
    j["ablation"] = {{"enable_visual_reasoner", ablation.enable_visual_reasoner},
                     {"enable_numeric_reasoner", ablation.enable_numeric_reasoner},
                     {"enable_shared_memory", ablation.enable_shared_memory},
                     {"enable_gated_attention", ablation.enable_gated_attention},
                     {"enable_tools", ablation.enable_tools},
                     {"completion_strategy", completion_name(ablation.completion_strategy)}};
    j["training"] = {{"lr", training.lr},
                     {"batch_size", training.batch_size},
                     {"epochs", training.epochs},
                     {"lambda_com", training.lambda_com},
                     {"patience", training.patience}};
    return j;
}

EngineConfig engine_config_from(const RunConfig& cfg, int channels, int classes) {
    EngineConfig e;
    e.task = cfg.task;
    e.seq_len = cfg.seq_len;
    e.horizon = cfg.task == Task::Forecast ? cfg.pred_len : 0;
    e.channels = channels;
    e.classes = classes;
    e.seed = cfg.seed;
    e.coord.d_m = cfg.d_memory;
    e.coord.d_model = cfg.d_model;
    e.coord.e_layers = cfg.e_layers;
    e.coord.heads = cfg.heads;
    e.ode = cfg.ode;
    e.tools.patch = cfg.patch;
    e.tools.patch.d_model = cfg.d_model;
    e.tools.e_layers = cfg.e_layers;
    e.tools.heads = cfg.heads;
    e.tools.d_ff = cfg.d_ff;
    e.tools.dropout = cfg.dropout;
    e.router = cfg.router;
    e.verifier = cfg.verifier;
    e.analyzer = cfg.analyzer;
    e.anchor_limits = cfg.anchor_limits;
    e.ablation = cfg.ablation;
    e.lambda_com = cfg.training.lambda_com;
    e.anchor_source = cfg.anchor_source;
    e.plot = cfg.plot;
    e.tool_availability = cfg.tool_availability;
    e.detect_threshold_percentile = cfg.detect_threshold_percentile;
    e.max_concurrent_requests = cfg.max_concurrent_requests;
    if (cfg.anchor_source == AnchorSource::Vlm) {
        const char* ep = std::getenv(cfg.endpoint_env.c_str());
        if (!ep || !*ep)
            throw ConfigError("anchors.source is 'vlm' but env var " + cfg.endpoint_env + " is unset");
        e.vlm.endpoint = ep;
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) e.vlm.api_key = key;
        e.vlm.model_id = cfg.model_id;
        e.vlm.timeout_ms = cfg.vlm_timeout_ms;
        e.vlm.max_retries = cfg.vlm_max_retries;
    }
    return e;
}

PreparedData prepare_data(const RunConfig& cfg) {
    PreparedData out;
    Task task = cfg.task;
    int L = cfg.seq_len;
    int H = cfg.task == Task::Forecast ? cfg.pred_len : 0;

    if (cfg.source == "file") {
        RawSeries raw = load_series(cfg.path, {});
        if (task == Task::Classify)
            throw ConfigError("file source does not provide class labels; use a synthetic dataset");
        out.windows = make_windows(raw, L, H, task);
    } else {
        SynthSpec spec;
        spec.kind = synth_kind_from_string(cfg.synthetic.kind);
        spec.length = cfg.synthetic.length;
        spec.channels = cfg.synthetic.channels;
        spec.period = cfg.synthetic.period;
        spec.amplitude = cfg.synthetic.amplitude;
        spec.trend = cfg.synthetic.trend;
        spec.noise = cfg.synthetic.noise;
        spec.level = cfg.synthetic.level;

        if (task == Task::Classify) {
            // Two synthetic classes: plain sine vs sine with a strong trend.
            for (int i = 0; i < cfg.synthetic.n_windows; ++i) {
                SynthSpec a = spec;
                a.kind = SynthKind::Sine;
                a.length = L;
                a.phase = 0.3 * i;
                auto w0 = synth_series(a, cfg.seed + static_cast<std::uint64_t>(i));
                w0.label = 0;
                out.windows.push_back(std::move(w0));

                SynthSpec b = spec;
                b.kind = SynthKind::SinePlusTrend;
                b.length = L;
                b.trend = std::max(spec.trend, 0.05);
                b.phase = 0.3 * i;
                auto w1 = synth_series(b, cfg.seed + 1000 + static_cast<std::uint64_t>(i));
                w1.label = 1;
                out.windows.push_back(std::move(w1));
            }
            out.classes = 2;
        } else {
            if (task == Task::Detect && cfg.synthetic.spike_every > 0) {
                spec.kind = SynthKind::SpikeAnomaly;
                int first = std::max(cfg.synthetic.spike_every / 2, cfg.synthetic.spike_from);
                for (int t = first; t < spec.length; t += cfg.synthetic.spike_every)
                    spec.spike_positions.push_back(t);
            }
            auto series = synth_series(spec, cfg.seed);
            RawSeries raw;
            raw.values = series.values;
            raw.anomaly_labels = series.anomaly_labels;
            out.windows = make_windows(raw, L, H, task);
        }
    }

    if (task == Task::Impute) {
        for (std::size_t i = 0; i < out.windows.size(); ++i)
            out.windows[i] = apply_mask(out.windows[i], cfg.mask_ratio, cfg.seed + i);
    }

    if (out.windows.empty()) throw InsufficientDataError("no windows produced from the data source");
    out.channels = out.windows[0].channels();
    if (task == Task::Classify) {
        int max_label = 0;
        for (const auto& w : out.windows) max_label = std::max(max_label, w.label.value_or(0));
        out.classes = std::max(out.classes, max_label + 1);
    } else {
        out.classes = cfg.classes;
    }
    out.split = chronological_split(out.windows.size(), cfg.split);
    return out;
}

} // namespace tsa
