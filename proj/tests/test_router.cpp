#include "tsagent/router.hpp"

#include <doctest.h>

#include <cmath>

using namespace tsa;

namespace {

struct Fixture {
    ToolBuildConfig tcfg;
    ParamStore ps;
    Rng rng{3};
    ToolRegistry tools;
    ChainRegistry chains;
    Router router;

    Fixture()
        : tcfg([] {
              ToolBuildConfig c;
              c.seq_len = 32;
              c.horizon = 8;
              c.channels = 1;
              c.patch = {16, 8, 8};
              c.d_model_fused = 8;
              c.e_layers = 1;
              c.heads = 2;
              c.d_ff = 16;
              c.dropout = 0.0;
              return c;
          }()),
          tools(build_registry(ps, tcfg, Task::Forecast, rng)),
          chains(ChainRegistry::defaults(Task::Forecast, tools)),
          router(ps, {}, 8, static_cast<int>(chains.size()), rng) {}

    TimeSeriesWindow window() {
        SynthSpec spec;
        spec.kind = SynthKind::Sine;
        spec.length = 32;
        auto w = synth_series(spec, 0);
        w.horizon = 8;
        return w;
    }
};

} // namespace

TEST_CASE("default chain registry has K in [1,3] and skips unavailable tools") {
    Fixture f;
    CHECK(f.chains.size() == 3);
    for (const auto& c : f.chains.chains()) {
        CHECK(c.tools.size() >= 1);
        CHECK(c.tools.size() <= 3);
        for (const auto& id : c.full()) CHECK(f.tools.get(id)->available());
    }
}

TEST_CASE("zero-initialized controller routes uniformly in ensemble mode") {
    Fixture f;
    auto w = f.window();
    auto priors = compute_statistics(w);
    auto mem = SharedMemory::init(32, 8);
    auto d = f.router.score_chains(Task::Forecast, priors, mem, 0.9);
    REQUIRE(d.probabilities.size() == 3);
    for (double p : d.probabilities) CHECK(p == doctest::Approx(1.0 / 3.0));
    CHECK(d.mode == RoutingMode::Ensemble);
    CHECK(d.ensemble_k == 3);
    double sum = 0.0;
    for (double p : d.probabilities) sum += p;
    CHECK(std::fabs(sum - 1.0) < 1e-9);
}

TEST_CASE("logits [5,0,0] give top probability ~0.987 and greedy mode") {
    Fixture f;
    auto d = f.router.decision_from_logits({5.0, 0.0, 0.0});
    CHECK(d.probabilities[0] == doctest::Approx(0.9867).epsilon(1e-3));
    CHECK(d.mode == RoutingMode::Greedy);
    CHECK(d.selected == std::vector<int>{0});
}

TEST_CASE("single candidate is probability 1 and greedy") {
    Fixture f;
    auto d = f.router.decision_from_logits({0.42});
    CHECK(d.probabilities[0] == doctest::Approx(1.0));
    CHECK(d.mode == RoutingMode::Greedy);
}

TEST_CASE("greedy/ensemble switch sits exactly at the 0.6 boundary") {
    Fixture f;
    // two candidates: p_top = 1/(1+e^-x); sweep the logit gap across the
    // boundary p=0.6 at gap = ln(0.6/0.4)
    double crit = std::log(0.6 / 0.4);
    for (double eps : {-1e-9, -1e-12, 0.0, 1e-12, 1e-9}) {
        auto d = f.router.decision_from_logits({crit + eps, 0.0, -1e9});
        double top = d.probabilities[0];
        if (top >= 0.6) CHECK(d.mode == RoutingMode::Greedy);
        else CHECK(d.mode == RoutingMode::Ensemble);
        // exact threshold: p exactly 0.6 is greedy
        if (eps == 0.0) CHECK(d.mode == RoutingMode::Greedy);
    }
    auto below = f.router.decision_from_logits({crit - 1e-6, 0.0, -1e9});
    CHECK(below.mode == RoutingMode::Ensemble);
    auto above = f.router.decision_from_logits({crit + 1e-6, 0.0, -1e9});
    CHECK(above.mode == RoutingMode::Greedy);
}

TEST_CASE("routing is deterministic for fixed inputs") {
    Fixture f;
    auto w = f.window();
    auto priors = compute_statistics(w);
    auto mem = SharedMemory::init(32, 8);
    auto d1 = f.router.score_chains(Task::Forecast, priors, mem, 0.9);
    auto d2 = f.router.score_chains(Task::Forecast, priors, mem, 0.9);
    CHECK(d1.scores == d2.scores);
    CHECK(d1.selected == d2.selected);
}

TEST_CASE("run_chain composes the default chain to a horizon output") {
    Fixture f;
    auto w = f.window();
    auto priors = compute_statistics(w);
    AnchorSet anchors;
    ToolContext ctx;
    ctx.window = &w;
    ctx.priors = &priors;
    ctx.anchors = &anchors;
    ToolValue input{ValueKind::Series, Tensor::from({32, 1}, w.values.v), std::nullopt, std::nullopt};

    auto run = run_chain(f.tools, f.chains.chains()[0], input, ctx);
    REQUIRE(run.output.has_value());
    CHECK(run.output->kind == ValueKind::Horizon);
    CHECK(run.output->tensor.shape() == Shape{8, 1});
    CHECK(run.steps.size() == 3);
    CHECK(run.steps[0].tool_id == "revin");
}

TEST_CASE("a failing tool aborts the chain and is named in the trace") {
    // stub tool that always raises NumericError
    class FailingTool : public ToolBase {
    public:
        FailingTool() : ToolBase("failing_stub", {ValueKind::Series, ValueKind::Series}, {Task::Forecast}) {}
        ToolValue run(const ToolValue&, ToolContext&) override {
            throw NumericError("deliberate failure");
        }
    };
    Fixture f;
    ToolRegistry reg;
    reg.add(std::make_shared<FailingTool>());
    auto lt = f.tools.get("linear_trend_forecast");
    reg.add(lt);
    ChainSpec spec{"stub_chain", {}, {"failing_stub", "linear_trend_forecast"}, {}};

    auto w = f.window();
    auto priors = compute_statistics(w);
    AnchorSet anchors;
    ToolContext ctx;
    ctx.window = &w;
    ctx.priors = &priors;
    ctx.anchors = &anchors;
    ToolValue input{ValueKind::Series, Tensor::from({32, 1}, w.values.v), std::nullopt, std::nullopt};

    auto run = run_chain(reg, spec, input, ctx);
    CHECK_FALSE(run.output.has_value());
    CHECK(run.error.find("failing_stub") != std::string::npos);
    REQUIRE(!run.steps.empty());
    CHECK(run.steps.back().tool_id == "failing_stub");
}

TEST_CASE("ensemble combines by softmax weights") {
    ToolValue a{ValueKind::Horizon, Tensor::full({4, 1}, 1.0), std::nullopt, std::nullopt};
    ToolValue b{ValueKind::Horizon, Tensor::full({4, 1}, 0.0), std::nullopt, std::nullopt};

    SUBCASE("equal scores average") {
        auto out = ensemble({a, b}, {0.7, 0.7});
        for (double v : out.tensor.data()) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("single result passes through") {
        auto out = ensemble({a}, {0.2});
        for (double v : out.tensor.data()) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("scores [ln 3, 0] weight 3:1") {
        auto out = ensemble({a, b}, {std::log(3.0), 0.0});
        for (double v : out.tensor.data()) CHECK(v == doctest::Approx(0.75));
    }
    SUBCASE("shape mismatch is rejected") {
        ToolValue c{ValueKind::Horizon, Tensor::full({5, 1}, 0.0), std::nullopt, std::nullopt};
        CHECK_THROWS_AS(ensemble({a, c}, {0.5, 0.5}), ShapeError);
    }
}

TEST_CASE("verifier totality and idempotence") {
    Fixture f;
    auto w = f.window();
    auto priors = compute_statistics(w);
    AnchorSet anchors;
    anchors.task = Task::Forecast;
    anchors.confidence = 0.99;
    anchors.anchors.push_back({34, 0.0, 0, "start"});
    anchors.anchors.push_back({38, 0.5, 1, "peak"});

    auto check_fixed_point = [&](std::optional<ToolValue> cand) {
        auto v1 = verify(cand, Task::Forecast, anchors, priors, w);
        CHECK(v1.value.shape() == Shape{8, 1});
        for (double x : v1.value.data()) CHECK(std::isfinite(x));
        ToolValue revisit{ValueKind::Horizon, v1.value, std::nullopt, std::nullopt};
        auto v2 = verify(revisit, Task::Forecast, anchors, priors, w);
        for (std::size_t i = 0; i < v1.value.data().size(); ++i)
            CHECK(v2.value.data()[i] == doctest::Approx(v1.value.data()[i]).epsilon(1e-12));
        return v1;
    };

    SUBCASE("candidate within bounds is untouched") {
        ToolValue ok{ValueKind::Horizon, Tensor::full({8, 1}, 0.1), std::nullopt, std::nullopt};
        auto v = verify(ok, Task::Forecast, anchors, priors, w);
        CHECK_FALSE(v.fallback_used);
        CHECK(v.corrections.empty());
        for (double x : v.value.data()) CHECK(x == doctest::Approx(0.1));
    }
    SUBCASE("NaN candidate falls back to a finite prediction") {
        ToolValue bad{ValueKind::Horizon, Tensor::full({8, 1}, 0.0), std::nullopt, std::nullopt};
        bad.tensor.data_mut()[3] = std::nan("");
        auto v = check_fixed_point(bad);
        CHECK(v.fallback_used);
    }
    SUBCASE("short output is padded by repeating the last row") {
        ToolValue shrt{ValueKind::Horizon, Tensor::full({7, 1}, 0.2), std::nullopt, std::nullopt};
        auto v = verify(shrt, Task::Forecast, anchors, priors, w);
        CHECK(v.value.shape() == Shape{8, 1});
        CHECK_FALSE(v.fallback_used);
        REQUIRE(!v.corrections.empty());
        CHECK(v.corrections[0].find("padded rows") != std::string::npos);
    }
    SUBCASE("wild values are softly projected into the envelope") {
        ToolValue wild{ValueKind::Horizon, Tensor::full({8, 1}, 1e6), std::nullopt, std::nullopt};
        auto v = check_fixed_point(wild);
        double hi = 0.5 + 3.0 * priors.history_std + priors.history_std;  // bound + margin
        for (double x : v.value.data()) CHECK(x <= hi + 1e-9);
    }
    SUBCASE("missing candidate uses the fallback") {
        auto v = check_fixed_point(std::nullopt);
        CHECK(v.fallback_used);
    }
    SUBCASE("recompute is attempted once before fallback") {
        int calls = 0;
        ToolValue bad{ValueKind::Horizon, Tensor::full({8, 1}, 0.0), std::nullopt, std::nullopt};
        bad.tensor.data_mut()[0] = std::nan("");
        auto v = verify(bad, Task::Forecast, anchors, priors, w, [&]() -> std::optional<ToolValue> {
            ++calls;
            return ToolValue{ValueKind::Horizon, Tensor::full({8, 1}, 0.3), std::nullopt, std::nullopt};
        });
        CHECK(calls == 1);
        CHECK_FALSE(v.fallback_used);
        for (double x : v.value.data()) CHECK(x == doctest::Approx(0.3));
    }
}

TEST_CASE("verifier clips negative anomaly scores") {
    Fixture f;
    SynthSpec spec;
    spec.length = 32;
    auto w = synth_series(spec, 0);
    auto priors = compute_statistics(w);
    AnchorSet anchors;
    anchors.task = Task::Detect;
    ToolValue cand{ValueKind::Scores, Tensor::full({32, 1}, -1.0), std::nullopt, std::nullopt};
    auto v = verify(cand, Task::Detect, anchors, priors, w);
    for (double x : v.value.data()) CHECK(x >= 0.0);
}
