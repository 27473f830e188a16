#include "tsagent/config.hpp"
#include "tsagent/pipeline.hpp"
#include "tsagent/training.hpp"

#include <doctest.h>

#include <cmath>

using namespace tsa;

namespace {

// Desk-sized engine configuration for pipeline tests.
EngineConfig tiny_config(Task task) {
    EngineConfig cfg;
    cfg.task = task;
    cfg.seq_len = 48;
    cfg.horizon = task == Task::Forecast ? 12 : 0;
    cfg.channels = 1;
    cfg.classes = 2;
    cfg.seed = 7;
    cfg.coord.d_m = 8;
    cfg.coord.d_model = 8;
    cfg.coord.e_layers = 1;
    cfg.coord.heads = 2;
    cfg.ode.hidden_dim = 8;
    cfg.ode.step_size = 0.25;  // 4 solver steps
    cfg.tools.patch = {16, 8, 8};
    cfg.tools.e_layers = 1;
    cfg.tools.heads = 2;
    cfg.tools.d_ff = 16;
    cfg.tools.dropout = 0.1;
    cfg.tools.timesblock_d = 8;
    cfg.tools.timesblock_layers = 1;
    cfg.tools.tcn_channels = 8;
    cfg.tools.anomaly_d = 8;
    cfg.tools.vae_hidden = 16;
    cfg.tools.vae_latent = 4;
    return cfg;
}

TimeSeriesWindow sine_window(Task task, std::uint64_t seed = 0) {
    SynthSpec spec;
    spec.kind = task == Task::Forecast ? SynthKind::SinePlusTrend : SynthKind::Sine;
    spec.length = task == Task::Forecast ? 60 : 48;
    spec.period = 12.0;
    auto series = synth_series(spec, seed);
    RawSeries raw;
    raw.values = series.values;
    auto windows = make_windows(raw, 48, task == Task::Forecast ? 12 : 0, task);
    return windows.front();
}

} // namespace

TEST_CASE("forecast pipeline runs end to end and produces a task-shaped output") {
    Engine engine(tiny_config(Task::Forecast));
    auto w = sine_window(Task::Forecast);
    auto res = engine.run_window(w, 0, false);
    CHECK(res.prediction.value.shape() == Shape{12, 1});
    for (double v : res.prediction.value.data()) CHECK(std::isfinite(v));
    CHECK(res.routing.probabilities.size() == 3);
    CHECK(res.memory_log.size() == 3);  // Analyzer -> Reasoner -> Executor
    CHECK(res.anchors_from_oracle);
    CHECK(!res.anchors.anchors.empty());
}

TEST_CASE("training mode yields a differentiable loss that reaches the parameters") {
    Engine engine(tiny_config(Task::Forecast));
    auto w = sine_window(Task::Forecast);
    auto res = engine.run_window(w, 0, true);
    REQUIRE(res.loss.defined());
    CHECK(std::isfinite(res.loss.item()));
    backward(res.loss);
    double grad_norm = 0.0;
    for (auto& p : engine.params().all_mut())
        for (double g : p.grad()) grad_norm += g * g;
    CHECK(grad_norm > 0.0);
}

TEST_CASE("pipeline is deterministic for a fixed seed") {
    auto run_once = [] {
        Engine engine(tiny_config(Task::Forecast));
        auto w = sine_window(Task::Forecast);
        return engine.run_window(w, 0, false).prediction.value.data();
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("every ablation flag still yields a valid run") {
    for (int flag = 0; flag < 5; ++flag) {
        auto cfg = tiny_config(Task::Forecast);
        switch (flag) {
            case 0: cfg.ablation.enable_visual_reasoner = false; break;
            case 1: cfg.ablation.enable_numeric_reasoner = false; break;
            case 2: cfg.ablation.enable_shared_memory = false; break;
            case 3: cfg.ablation.enable_gated_attention = false; break;
            case 4: cfg.ablation.enable_tools = false; break;
        }
        Engine engine(cfg);
        auto w = sine_window(Task::Forecast);
        auto res = engine.run_window(w, 0, false);
        CHECK(res.prediction.value.shape() == Shape{12, 1});
        for (double v : res.prediction.value.data()) CHECK(std::isfinite(v));
        if (flag == 0) CHECK(res.anchors.anchors.empty());
        if (flag == 4) CHECK(engine.chains().size() == 1);
    }
}

TEST_CASE("completion strategies all complete") {
    for (auto strategy : {CompletionStrategy::Ode, CompletionStrategy::Linear,
                          CompletionStrategy::Quadratic, CompletionStrategy::Repeat}) {
        auto cfg = tiny_config(Task::Forecast);
        cfg.ablation.completion_strategy = strategy;
        Engine engine(cfg);
        auto w = sine_window(Task::Forecast);
        auto res = engine.run_window(w, 0, false);
        for (double v : res.prediction.value.data()) CHECK(std::isfinite(v));
    }
}

TEST_CASE("classify, impute and detect pipelines produce valid outputs") {
    SUBCASE("classify") {
        Engine engine(tiny_config(Task::Classify));
        auto w = sine_window(Task::Classify);
        w.label = 0;
        auto res = engine.run_window(w, 0, false);
        CHECK(res.prediction.value.shape() == Shape{1, 2});
        auto res_t = engine.run_window(w, 0, true);
        CHECK(std::isfinite(res_t.loss.item()));
    }
    SUBCASE("impute") {
        Engine engine(tiny_config(Task::Impute));
        auto w = sine_window(Task::Impute);
        w = apply_mask(w, 0.25, 3);
        auto res = engine.run_window(w, 0, false);
        CHECK(res.prediction.value.shape() == Shape{48, 1});
        // observed cells pass through bit-exactly even after verification
        for (int t = 0; t < 48; ++t)
            if (!w.is_masked(t, 0))
                CHECK(res.prediction.value.data()[static_cast<std::size_t>(t)] == w.values.at(t, 0));
    }
    SUBCASE("detect") {
        Engine engine(tiny_config(Task::Detect));
        SynthSpec spec;
        spec.kind = SynthKind::SpikeAnomaly;
        spec.length = 48;
        spec.spike_positions = {20};
        auto w = synth_series(spec, 0);
        auto res = engine.run_window(w, 0, false);
        CHECK(res.prediction.value.shape() == Shape{48, 1});
        for (double v : res.prediction.value.data()) CHECK(v >= 0.0);
    }
}

TEST_CASE("default hyperparameters wire up and run at full size") {
    // stock dimensions: d_model 64, d_memory 64, hidden 128, patch 16/8,
    // 2 encoder layers, 4 heads, 20 solver steps
    EngineConfig cfg;
    cfg.task = Task::Forecast;
    cfg.seq_len = 96;
    cfg.horizon = 96;
    cfg.channels = 7;
    cfg.seed = 0;
    CHECK(cfg.coord.d_m == 64);
    CHECK(cfg.coord.d_model == 64);
    CHECK(cfg.ode.hidden_dim == 128);
    CHECK(cfg.ode.step_size == 0.05);
    CHECK(cfg.ode.steps() == 20);
    CHECK(cfg.tools.patch.patch_len == 16);
    CHECK(cfg.tools.patch.stride == 8);
    CHECK(cfg.tools.e_layers == 2);
    CHECK(cfg.tools.heads == 4);
    CHECK(cfg.tools.dropout == 0.1);
    CHECK(cfg.router.greedy_threshold == 0.6);
    CHECK(cfg.anchor_limits.max_anchors == 20);
    CHECK(cfg.anchor_limits.confidence_threshold == 0.7);

    Engine engine(cfg);
    SynthSpec spec;
    spec.kind = SynthKind::SinePlusTrend;
    spec.length = 192;
    spec.channels = 7;
    auto series = synth_series(spec, 0);
    RawSeries raw;
    raw.values = series.values;
    auto w = make_windows(raw, 96, 96, Task::Forecast).front();
    auto res = engine.run_window(w, 0, false);
    CHECK(res.prediction.value.shape() == Shape{96, 7});
    for (double v : res.prediction.value.data()) CHECK(std::isfinite(v));
}

TEST_CASE("per-task training defaults") {
    auto f = TrainConfig::defaults(Task::Forecast);
    CHECK(f.lr == 1e-4);
    CHECK(f.batch_size == 32);
    CHECK(f.epochs == 10);
    auto i = TrainConfig::defaults(Task::Impute);
    CHECK(i.lr == 1e-3);
    CHECK(i.batch_size == 16);
    CHECK(i.epochs == 10);
    auto c = TrainConfig::defaults(Task::Classify);
    CHECK(c.lr == 1e-3);
    CHECK(c.batch_size == 16);
    CHECK(c.epochs == 30);
    auto d = TrainConfig::defaults(Task::Detect);
    CHECK(d.lr == 1e-4);
    CHECK(d.batch_size == 128);
    CHECK(d.epochs == 10);
    CHECK(d.patience == 3);
}

TEST_CASE("config parsing rejects unknown keys with the offending path") {
    nlohmann::json doc = {{"task", "forecast"}, {"data", {{"sequence_length", 96}}}};
    try {
        parse_run_config(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("data.sequence_length") != std::string::npos);
    }
}

TEST_CASE("a fully-defaulted config is valid for every task") {
    for (const char* task : {"forecast", "classify", "impute", "detect"}) {
        nlohmann::json doc = {{"task", task}};
        auto cfg = parse_run_config(doc);
        CHECK(task_name(cfg.task) == task);
        auto data = prepare_data(cfg);
        CHECK(!data.windows.empty());
    }
}

TEST_CASE("short training run reduces the training loss on a tiny forecast set") {
    auto ecfg = tiny_config(Task::Forecast);
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 140;
    spec.period = 12.0;
    auto series = synth_series(spec, 0);
    RawSeries raw;
    raw.values = series.values;
    auto windows = make_windows(raw, 48, 12, Task::Forecast);
    SplitIndices split = chronological_split(windows.size(), {0.7, 0.15, 0.15});

    Engine engine(ecfg);
    TrainConfig tcfg;
    tcfg.task = Task::Forecast;
    tcfg.lr = 3e-3;
    tcfg.batch_size = 8;
    tcfg.epochs = 4;
    tcfg.seed = 1;
    auto history = train(engine, windows, split, tcfg);
    REQUIRE(history.epochs.size() >= 2);
    CHECK(history.epochs.back().train_loss < history.epochs.front().train_loss);
}

TEST_CASE("patience stops training after a plateau") {
    // patience counting rule: best at epoch b, stop at epoch b + patience
    auto ecfg = tiny_config(Task::Forecast);
    ecfg.seed = 3;
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 80;
    auto series = synth_series(spec, 0);
    RawSeries raw;
    raw.values = series.values;
    auto windows = make_windows(raw, 48, 12, Task::Forecast);
    SplitIndices split;
    for (std::size_t i = 0; i + 4 < windows.size(); ++i) split.train.push_back(i);
    split.val = {windows.size() - 2, windows.size() - 1};

    Engine engine(ecfg);
    TrainConfig tcfg;
    tcfg.task = Task::Forecast;
    tcfg.lr = 0.0;  // frozen parameters: the validation score plateaus exactly
    tcfg.epochs = 30;
    tcfg.batch_size = 4;
    tcfg.patience = 3;
    auto history = train(engine, windows, split, tcfg);
    CHECK(history.early_stopped);
    CHECK(history.best_epoch == 0);
    CHECK(static_cast<int>(history.epochs.size()) == history.best_epoch + tcfg.patience + 1);
}
