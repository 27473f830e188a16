// Batch command-line entry point: dataset runs, training, ablations, oracle
// anchor dumps and config validation. Exit codes: 0 success, 2 config error,
// 3 data error, 4 transport error.

#include "tsagent/anchor_parse.hpp"
#include "tsagent/checkpoint.hpp"
#include "tsagent/config.hpp"
#include "tsagent/oracle.hpp"
#include "tsagent/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tsa;
using nlohmann::json;

namespace {

struct CliOverrides {
    std::string config_path;
    bool offline = false;
    long long seed = -1;
    std::string out;
    int workers = 0;
};

RunConfig load_config(const CliOverrides& o) {
    RunConfig cfg = o.config_path.empty() ? parse_run_config(json::object()) : load_run_config(o.config_path);
    if (o.offline) cfg.anchor_source = AnchorSource::Offline;
    if (o.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(o.seed);
        cfg.training.seed = cfg.seed;
    }
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.workers > 0) cfg.workers = o.workers;
    return cfg;
}

json records_json(const std::vector<WindowRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) {
        json steps = json::array();
        for (const auto& s : r.trace)
            steps.push_back({{"tool", s.tool_id}, {"millis", s.millis}, {"note", s.note}});
        arr.push_back({{"window", r.index},
                       {"chains", r.chains},
                       {"fallback", r.fallback},
                       {"corrections", r.corrections},
                       {"anchor_confidence", r.anchor_confidence},
                       {"anchors_from_oracle", r.anchors_from_oracle},
                       {"anchor_count", r.anchor_count},
                       {"anchor_warning", r.anchor_warning},
                       {"steps", steps}});
    }
    return arr;
}

std::vector<std::string> emit_plots(const RunConfig& cfg, const PreparedData& data,
                                    const std::string& out_dir, std::size_t max_plots = 3) {
    std::vector<std::string> paths;
    ensure_dir(out_dir + "/plots");
    std::size_t n = std::min(max_plots, data.split.test.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& w = data.windows[data.split.test[i]];
        auto priors = compute_statistics(w, cfg.analyzer);
        auto img = render_plot(w, priors, cfg.plot);
        std::string path = out_dir + "/plots/" + content_hash(img.png) + ".png";
        std::ofstream os(path, std::ios::binary);
        os.write(reinterpret_cast<const char*>(img.png.data()), static_cast<std::streamsize>(img.png.size()));
        paths.push_back(path);
    }
    return paths;
}

std::string summarize(const RunConfig& cfg, const EvalResult& eval, const TrainHistory* history) {
    std::ostringstream os;
    os << "task: " << task_name(cfg.task) << "\n";
    os << "windows evaluated: " << eval.windows << "\n";
    switch (cfg.task) {
        case Task::Forecast:
            os << "mse: " << eval.mse << "\nmae: " << eval.mae << "\n";
            break;
        case Task::Impute:
            os << "mse: " << eval.mse << "\nmae: " << eval.mae << "\nmask cells: " << eval.mask_cells
               << "\n";
            break;
        case Task::Classify:
            os << "accuracy: " << eval.accuracy << "%\n";
            break;
        case Task::Detect:
            os << "point-adjust P/R/F1: " << eval.anomaly.precision << " / " << eval.anomaly.recall
               << " / " << eval.anomaly.f1 << " (threshold " << eval.best_threshold << ")\n";
            break;
    }
    os << "fallback rate: " << eval.fallback_rate << "\n";
    if (history) {
        os << "epochs trained: " << history->epochs.size() << " (best " << history->best_epoch << ", val "
           << history->best_val << (history->early_stopped ? ", early stop" : "") << ")\n";
    }
    return os.str();
}

int cmd_run(const CliOverrides& o, bool do_train) {
    auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = load_config(o);
    PreparedData data = prepare_data(cfg);

    Engine engine(engine_config_from(cfg, data.channels, data.classes));
    if (!cfg.checkpoint.empty()) {
        if (!std::filesystem::exists(cfg.checkpoint))
            throw ConfigError("checkpoint '" + cfg.checkpoint + "' does not exist");
        load_checkpoint(cfg.checkpoint, engine.params());
    }

    TrainHistory history;
    if (do_train) {
        TrainConfig tcfg = cfg.training;
        tcfg.task = cfg.task;
        history = train(engine, data.windows, data.split, tcfg);
        ensure_dir(cfg.output_dir);
        save_checkpoint(cfg.output_dir + "/checkpoint.bin", engine.params(), cfg.seed);
    }

    std::vector<WindowRecord> records;
    EvalResult eval = evaluate(engine, data.windows, data.split.test, cfg.workers, &records);

    RunReport report;
    report.config_snapshot = cfg.snapshot();
    report.metrics = metrics_json(cfg.task, eval);
    if (do_train) report.metrics["history"] = history_json(history);
    report.traces = records_json(records);
    report.artifact_paths = emit_plots(cfg, data, cfg.output_dir);
    if (do_train) report.artifact_paths.push_back(cfg.output_dir + "/checkpoint.bin");
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.traces = json{{"windows", report.traces},
                         {"wall_seconds", wall},
                         {"tool_manifest", engine.tools().manifest()}};
    report.summary_text = summarize(cfg, eval, do_train ? &history : nullptr);
    write_report(cfg.output_dir, report);

    std::cout << report.summary_text;
    std::cout << "report written to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_ablate(const CliOverrides& o, const std::vector<std::string>& flag_specs, bool sweep_completion,
               bool do_train) {
    RunConfig base = load_config(o);

    struct Variant {
        std::string name;
        RunConfig cfg;
    };
    std::vector<Variant> variants;
    variants.push_back({"baseline", base});
    for (const auto& spec : flag_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) throw ConfigError("ablation flag must be name=value: " + spec);
        std::string name = spec.substr(0, eq);
        std::string value = spec.substr(eq + 1);
        RunConfig v = base;
        bool on = value == "true" || value == "1";
        if (name == "enable_visual_reasoner") v.ablation.enable_visual_reasoner = on;
        else if (name == "enable_numeric_reasoner") v.ablation.enable_numeric_reasoner = on;
        else if (name == "enable_shared_memory") v.ablation.enable_shared_memory = on;
        else if (name == "enable_gated_attention") v.ablation.enable_gated_attention = on;
        else if (name == "enable_tools") v.ablation.enable_tools = on;
        else if (name == "completion_strategy") v.ablation.completion_strategy = completion_from_string(value);
        else throw ConfigError("unknown ablation flag '" + name + "'");
        variants.push_back({spec, v});
    }
    if (sweep_completion) {
        for (const char* s : {"ode", "linear", "quadratic", "repeat"}) {
            RunConfig v = base;
            v.ablation.completion_strategy = completion_from_string(s);
            variants.push_back({std::string("completion_strategy=") + s, v});
        }
    }

    json rows = json::array();
    std::ostringstream summary;
    for (auto& variant : variants) {
        PreparedData data = prepare_data(variant.cfg);
        Engine engine(engine_config_from(variant.cfg, data.channels, data.classes));
        if (do_train) {
            TrainConfig tcfg = variant.cfg.training;
            tcfg.task = variant.cfg.task;
            train(engine, data.windows, data.split, tcfg);
        }
        EvalResult eval = evaluate(engine, data.windows, data.split.test, variant.cfg.workers);
        json row = metrics_json(variant.cfg.task, eval);
        row["variant"] = variant.name;
        rows.push_back(row);
        summary << variant.name << ": " << row.dump() << "\n";
    }

    RunReport report;
    report.config_snapshot = base.snapshot();
    report.metrics = json{{"ablation", rows}};
    report.traces = json::array();
    report.summary_text = summary.str();
    write_report(base.output_dir, report);
    std::cout << report.summary_text;
    return 0;
}

int cmd_oracle_anchors(const CliOverrides& o) {
    RunConfig cfg = load_config(o);
    PreparedData data = prepare_data(cfg);
    ensure_dir(cfg.output_dir);
    std::ofstream os(cfg.output_dir + "/anchors.jsonl");
    for (std::size_t i = 0; i < data.windows.size(); ++i) {
        const auto& w = data.windows[i];
        auto priors = compute_statistics(w, cfg.analyzer);
        auto anchors = offline_anchor_oracle(w, priors, cfg.task, default_anchor_range(cfg.task));
        json row = json::parse(serialize_anchor_set(anchors));
        os << json{{"window", i}, {"anchor_set", row}}.dump() << "\n";
    }
    std::cout << "anchors for " << data.windows.size() << " windows written to " << cfg.output_dir
              << "/anchors.jsonl\n";
    return 0;
}

int cmd_validate(const CliOverrides& o) {
    RunConfig cfg = load_config(o);
    std::cout << "config valid: task=" << task_name(cfg.task) << " seed=" << cfg.seed << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tool-driven multi-agent time series analysis engine"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOverrides o;
    app.add_option("--config", o.config_path, "run configuration file (JSON)");
    app.add_flag("--offline", o.offline, "force the offline anchor oracle (no network)");
    app.add_option("--seed", o.seed, "override the run seed");
    app.add_option("--out", o.out, "override the output directory");
    app.add_option("--workers", o.workers, "worker count for evaluation");

    auto* run = app.add_subcommand("run", "evaluate the pipeline over the test split");
    auto* tr = app.add_subcommand("train", "train, checkpoint, then evaluate");
    auto* ab = app.add_subcommand("ablate", "run ablation variants side by side");
    std::vector<std::string> flag_specs;
    bool sweep_completion = false;
    bool ablate_train = false;
    ab->add_option("--flag", flag_specs, "ablation flag as name=value (repeatable)");
    ab->add_flag("--sweep-completion", sweep_completion, "sweep completion strategies");
    ab->add_flag("--train", ablate_train, "train each variant before evaluating");
    auto* oa = app.add_subcommand("oracle-anchors", "dump offline oracle anchors for the dataset");
    auto* vc = app.add_subcommand("validate-config", "check a configuration file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(o, false);
        if (tr->parsed()) return cmd_run(o, true);
        if (ab->parsed()) return cmd_ablate(o, flag_specs, sweep_completion, ablate_train);
        if (oa->parsed()) return cmd_oracle_anchors(o);
        if (vc->parsed()) return cmd_validate(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 4;
    } catch (const InsufficientDataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const EngineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
