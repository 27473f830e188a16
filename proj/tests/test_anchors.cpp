#include "tsagent/anchor_parse.hpp"
#include "tsagent/oracle.hpp"
#include "tsagent/prompts.hpp"

#include <doctest.h>

#include <cmath>

using namespace tsa;

namespace {

WindowContext ctx_forecast() {
    WindowContext c;
    c.seq_len = 96;
    c.horizon = 96;
    c.history_min = -1.0;
    c.history_max = 1.0;
    c.history_std = 0.5;
    return c;
}

WindowContext ctx_input_only(int L = 96) {
    WindowContext c;
    c.seq_len = L;
    c.horizon = 0;
    c.history_min = -1.0;
    c.history_max = 2.0;
    c.history_std = 0.5;
    return c;
}

} // namespace

TEST_CASE("the documented forecasting example body parses to two anchors") {
    std::string body = R"({"confidence":0.85,"anchors":[{"t":96,"v":0.342,"type":"start"},{"t":120,"v":0.456,"type":"peak"}]})";
    auto s = parse_anchor_response(body, Task::Forecast, ctx_forecast());
    CHECK(s.confidence == doctest::Approx(0.85));
    REQUIRE(s.anchors.size() == 2);
    CHECK(s.anchors[0].t == 96);
    CHECK(s.anchors[0].v == doctest::Approx(0.342));
    CHECK(s.anchors[0].tau == 0);
    CHECK(s.anchors[1].t == 120);
    CHECK(s.anchors[1].tau == 1);  // "peak" maps to rising
}

TEST_CASE("the pretty-printed forecasting example with an ellipsis row still parses") {
    std::string body = R"(Output JSON:
{
  "confidence": 0.85,
  "anchors": [
    {"t": 96, "v": 0.342, "type": "start"},
    {"t": 120, "v": 0.456, "type": "peak"},
    ...
  ]
})";
    auto s = parse_anchor_response(body, Task::Forecast, ctx_forecast());
    CHECK(s.anchors.size() == 2);
}

TEST_CASE("the imputation example body with trailing commas parses") {
    std::string body = R"({
  "confidence": 0.88,
  "imputed_values": [
    {"t": 25, "v": 0.34, "reason": "interpolation"},
  ],
  "key_anchors": [
    {"t": 20, "v": 0.28, "type": "observed"},
  ]
})";
    auto s = parse_anchor_response(body, Task::Impute, ctx_input_only());
    CHECK(s.confidence == doctest::Approx(0.88));
    REQUIRE(s.imputed_values.size() == 1);
    CHECK(s.imputed_values[0].t == 25);
    CHECK(s.imputed_values[0].reason == "interpolation");
    REQUIRE(s.anchors.size() == 1);
    CHECK(s.anchors[0].label == "observed");
}

TEST_CASE("the anomaly example body parses with both scores and anchors") {
    std::string body = R"({
  "confidence": 0.82,
  "anomaly_scores": [
    {"t": 45, "score": 0.91, "reason": "spike"},
    {"t": 78, "score": 0.85, "reason": "level_shift"}
  ],
  "key_anchors": [
    {"t": 10, "v": 0.23, "type": "normal"},
    {"t": 45, "v": 1.82, "type": "anomaly"}
  ]
})";
    auto s = parse_anchor_response(body, Task::Detect, ctx_input_only());
    CHECK(s.confidence == doctest::Approx(0.82));
    REQUIRE(s.anomaly_scores.size() == 2);
    CHECK(s.anomaly_scores[0].reason == "spike");
    CHECK(s.anchors.size() == 2);
}

TEST_CASE("the classification example body parses with pattern type") {
    std::string body = R"({
  "confidence": 0.78,
  "pattern_type": "periodic",
  "key_anchors": [
    {"t": 12, "v": 0.89, "type": "period_peak"},
    {"t": 36, "v": -0.45, "type": "period_valley"}
  ]
})";
    auto s = parse_anchor_response(body, Task::Classify, ctx_input_only());
    CHECK(s.pattern_type == "periodic");
    REQUIRE(s.anchors.size() == 2);
    CHECK(s.anchors[0].tau == 1);
    CHECK(s.anchors[1].tau == -1);
}

TEST_CASE("code-fenced JSON parses like bare JSON") {
    std::string bare = R"({"confidence":0.9,"anchors":[{"t":100,"v":0.1,"type":"peak"}]})";
    std::string fenced = "```json\n" + bare + "\n```";
    auto a = parse_anchor_response(bare, Task::Forecast, ctx_forecast());
    auto b = parse_anchor_response(fenced, Task::Forecast, ctx_forecast());
    CHECK(serialize_anchor_set(a) == serialize_anchor_set(b));
}

TEST_CASE("forecast anchors inside the observed window are dropped") {
    std::string body = R"({"confidence":0.9,"anchors":[
        {"t":50,"v":0.1,"type":"peak"},{"t":100,"v":0.2,"type":"valley"}]})";
    auto s = parse_anchor_response(body, Task::Forecast, ctx_forecast());
    REQUIRE(s.anchors.size() == 1);
    CHECK(s.anchors[0].t == 100);
}

TEST_CASE("values beyond the 3-sigma envelope are clipped to it") {
    auto c = ctx_forecast();  // bounds [-2.5, 2.5]
    std::string body = R"({"confidence":0.9,"anchors":[{"t":100,"v":50.0,"type":"peak"}]})";
    auto s = parse_anchor_response(body, Task::Forecast, c);
    CHECK(s.anchors[0].v == doctest::Approx(2.5));
}

TEST_CASE("anchor lists beyond 20 are truncated keeping the first 20 by t") {
    std::string body = R"({"confidence":0.9,"anchors":[)";
    for (int i = 0; i < 30; ++i) {
        body += "{\"t\":" + std::to_string(96 + i) + ",\"v\":0.1,\"type\":\"peak\"}";
        if (i != 29) body += ",";
    }
    body += "]}";
    auto s = parse_anchor_response(body, Task::Forecast, ctx_forecast());
    CHECK(s.anchors.size() == 20);
    CHECK(s.anchors.back().t == 115);
}

TEST_CASE("consecutive anomaly entries collapse to the strongest one") {
    std::string body = R"({"confidence":0.9,"anomaly_scores":[
        {"t":10,"score":0.6,"reason":"a"},{"t":11,"score":0.95,"reason":"b"},{"t":12,"score":0.7,"reason":"c"},
        {"t":40,"score":0.5,"reason":"d"}]})";
    auto s = parse_anchor_response(body, Task::Detect, ctx_input_only());
    REQUIRE(s.anomaly_scores.size() == 2);
    CHECK(s.anomaly_scores[0].t == 11);
    CHECK(s.anomaly_scores[0].score == doctest::Approx(0.95));
    CHECK(s.anomaly_scores[1].t == 40);
}

TEST_CASE("parser error taxonomy") {
    CHECK_THROWS_AS(parse_anchor_response("no json here", Task::Forecast, ctx_forecast()), ParseError);
    CHECK_THROWS_AS(parse_anchor_response(R"({"anchors":[]})", Task::Forecast, ctx_forecast()), SchemaError);
    CHECK_THROWS_AS(parse_anchor_response(R"({"confidence":0.9})", Task::Forecast, ctx_forecast()), SchemaError);
    CHECK_THROWS_AS(
        parse_anchor_response(R"({"confidence":0.9,"pattern_type":"x"})", Task::Classify, ctx_input_only()),
        SchemaError);
    CHECK_THROWS_AS(parse_anchor_response(R"({"confidence":0.5,"anchors":[]})", Task::Forecast, ctx_forecast()),
                    LowConfidenceError);
    // imputation reason outside the allowed pair
    CHECK_THROWS_AS(parse_anchor_response(
                        R"({"confidence":0.9,"imputed_values":[{"t":3,"v":0.1,"reason":"guess"}]})",
                        Task::Impute, ctx_input_only()),
                    SchemaError);
}

TEST_CASE("serialize/parse round-trip is exact for conforming sets") {
    std::string body = R"({"confidence":0.85,"anchors":[
        {"t":96,"v":0.342,"type":"start"},{"t":120,"v":0.456,"type":"peak"}]})";
    auto s = parse_anchor_response(body, Task::Forecast, ctx_forecast());
    auto s2 = parse_anchor_response(serialize_anchor_set(s), Task::Forecast, ctx_forecast());
    CHECK(serialize_anchor_set(s2) == serialize_anchor_set(s));
    CHECK(s2.anchors.size() == s.anchors.size());
    for (std::size_t i = 0; i < s.anchors.size(); ++i) {
        CHECK(s2.anchors[i].t == s.anchors[i].t);
        CHECK(s2.anchors[i].v == s.anchors[i].v);
        CHECK(s2.anchors[i].tau == s.anchors[i].tau);
    }
}

TEST_CASE("fuzzed near-valid documents never crash") {
    Rng rng(31337);
    const std::string seeds[] = {
        R"({"confidence":0.9,"anchors":[{"t":100,"v":0.5,"type":"peak"}]})",
        R"({"confidence":0.8,"anomaly_scores":[{"t":5,"score":0.7,"reason":"x"}]})",
        R"({"confidence":0.75,"pattern_type":"periodic","key_anchors":[{"t":3,"v":1.0,"type":"peak"}]})",
        R"({"confidence":0.88,"imputed_values":[{"t":2,"v":0.3,"reason":"interpolation"}]})",
    };
    Task tasks[] = {Task::Forecast, Task::Detect, Task::Classify, Task::Impute};
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 1000; ++i) {
        int which = static_cast<int>(rng.randint(0, 3));
        std::string doc = seeds[which];
        int mutations = static_cast<int>(rng.randint(1, 6));
        for (int m = 0; m < mutations; ++m) {
            std::size_t pos = static_cast<std::size_t>(rng.randint(0, static_cast<std::int64_t>(doc.size()) - 1));
            switch (rng.randint(0, 3)) {
                case 0: doc.erase(pos, 1); break;
                case 1: doc.insert(pos, 1, static_cast<char>(rng.randint(32, 126))); break;
                case 2: doc[pos] = static_cast<char>(rng.randint(32, 126)); break;
                default: doc.insert(pos, "{"); break;
            }
        }
        try {
            auto s = parse_anchor_response(doc, tasks[which], which == 0 ? ctx_forecast() : ctx_input_only());
            ++parsed;
            // Every parsed set satisfies the invariants.
            CHECK(s.confidence >= 0.7);
            for (std::size_t a = 1; a < s.anchors.size(); ++a) CHECK(s.anchors[a].t > s.anchors[a - 1].t);
            CHECK(s.anchors.size() <= 20);
        } catch (const EngineError&) {
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 1000);
}

TEST_CASE("prompt templates substitute every placeholder") {
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 96;
    auto w = synth_series(spec, 0);
    w.horizon = 96;
    auto p = compute_statistics(w);

    auto req = build_prompt(Task::Forecast, w, p, default_anchor_range(Task::Forecast));
    CHECK(req.user_text.find("predict 96 future steps") != std::string::npos);
    CHECK(req.user_text.find("t=0 to 95") != std::string::npos);
    CHECK(req.user_text.find("8-15 key anchor points") != std::string::npos);
    CHECK_FALSE(has_unfilled_placeholder(req.user_text));

    auto wc = synth_series(spec, 0);
    auto reqc = build_prompt(Task::Classify, wc, compute_statistics(wc), default_anchor_range(Task::Classify));
    CHECK_FALSE(has_unfilled_placeholder(reqc.user_text));

    auto reqd = build_prompt(Task::Detect, wc, compute_statistics(wc), default_anchor_range(Task::Detect));
    CHECK_FALSE(has_unfilled_placeholder(reqd.user_text));
}

TEST_CASE("imputation prompt names the masked positions") {
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 96;
    auto w = synth_series(spec, 0);
    w.mask = Matrix(96, 1, 0.0);
    w.mask->at(25, 0) = 1.0;
    w.mask->at(60, 0) = 1.0;
    w.truth = w.values;
    w.values.at(25, 0) = 0.0;
    w.values.at(60, 0) = 0.0;
    auto p = compute_statistics(w);
    auto req = build_prompt(Task::Impute, w, p, default_anchor_range(Task::Impute));
    CHECK(req.user_text.find("positions [25, 60]") != std::string::npos);
    CHECK_FALSE(has_unfilled_placeholder(req.user_text));
}

TEST_CASE("imputation prompt with empty mask is a contract violation") {
    SynthSpec spec;
    spec.length = 32;
    auto w = synth_series(spec, 0);
    auto p = compute_statistics(w);
    CHECK_THROWS_AS(build_prompt(Task::Impute, w, p, default_anchor_range(Task::Impute)), ContractError);
}

TEST_CASE("oracle is deterministic and its sets satisfy the invariants") {
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 96;
    spec.period = 12.0;
    auto w = synth_series(spec, 0);
    w.horizon = 24;
    auto p = compute_statistics(w);

    auto a = offline_anchor_oracle(w, p, Task::Forecast);
    auto b = offline_anchor_oracle(w, p, Task::Forecast);
    CHECK(serialize_anchor_set(a) == serialize_anchor_set(b));
    CHECK(a.confidence == doctest::Approx(0.99));
    for (const auto& an : a.anchors) {
        CHECK(an.t >= 96);
        CHECK(an.t < 120);
    }
}

TEST_CASE("oracle forecast anchors track the analytic sine extension") {
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 96;
    spec.period = 12.0;
    spec.amplitude = 2.0;
    auto w = synth_series(spec, 0);
    w.horizon = 24;
    auto p = compute_statistics(w);
    auto s = offline_anchor_oracle(w, p, Task::Forecast);
    REQUIRE(!s.anchors.empty());

    // Brute-force extrema of the analytic extension for comparison.
    auto analytic = [&](int t) { return spec.amplitude * std::sin(2.0 * M_PI * t / spec.period); };
    int extrema_found = 0;
    for (const auto& a : s.anchors) {
        CHECK(std::fabs(a.v - analytic(a.t)) < 0.05 * spec.amplitude);
        if (a.label == "peak" || a.label == "valley") {
            ++extrema_found;
            // at a sine extremum the analytic slope is ~0 and |v| ~ amplitude
            CHECK(std::fabs(std::fabs(analytic(a.t)) - spec.amplitude) < 0.15 * spec.amplitude);
        }
    }
    CHECK(extrema_found >= 3);  // two peaks + two valleys fit in 24 steps
}

TEST_CASE("oracle anomaly scores are all zero on a constant series") {
    SynthSpec spec;
    spec.kind = SynthKind::Constant;
    spec.length = 48;
    auto w = synth_series(spec, 0);
    auto p = compute_statistics(w);
    auto s = offline_anchor_oracle(w, p, Task::Detect);
    for (double v : s.dense_anomaly_scores(48)) CHECK(v == 0.0);
}

TEST_CASE("oracle imputation entries cover each masked step with a reason") {
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 48;
    auto w = synth_series(spec, 0);
    w = apply_mask(w, 0.0, 0);
    w.mask->at(10, 0) = 1.0;
    w.values.at(10, 0) = 0.0;
    w.mask->at(47, 0) = 1.0;
    w.values.at(47, 0) = 0.0;
    auto p = compute_statistics(w);
    auto s = offline_anchor_oracle(w, p, Task::Impute);
    REQUIRE(s.imputed_values.size() == 2);
    CHECK(s.imputed_values[0].t == 10);
    CHECK(s.imputed_values[0].reason == "interpolation");
    CHECK(s.imputed_values[1].t == 47);
    CHECK(s.imputed_values[1].reason == "extrapolation");
}
