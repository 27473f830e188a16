#include "tsagent/plot.hpp"
#include "tsagent/priors.hpp"

#include <doctest.h>

#include <cmath>

using namespace tsa;

TEST_CASE("constant series stats: mean 5, std 0, slope 0, stationary tag") {
    SynthSpec spec;
    spec.kind = SynthKind::Constant;
    spec.level = 5.0;
    spec.length = 64;
    auto w = synth_series(spec, 0);
    auto p = compute_statistics(w);
    CHECK(p.stats[0].mean == doctest::Approx(5.0));
    CHECK(p.stats[0].std == doctest::Approx(0.0));
    CHECK(p.trend_slope[0] == doctest::Approx(0.0));
    CHECK(p.has_tag("stationary"));
    CHECK_FALSE(p.has_tag("trending"));
}

TEST_CASE("pure sine of period 12 is detected as periodic with period 12") {
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 96;
    spec.period = 12.0;
    auto w = synth_series(spec, 0);
    auto p = compute_statistics(w);
    REQUIRE(p.periodicity.has_value());
    CHECK(p.periodicity->period == 12);
    CHECK(p.has_tag("periodic"));
}

TEST_CASE("linear ramp has slope 1 and the trending tag") {
    TimeSeriesWindow w;
    w.values = Matrix(96, 1);
    for (int t = 0; t < 96; ++t) w.values.at(t, 0) = t;
    auto p = compute_statistics(w);
    CHECK(std::fabs(p.trend_slope[0] - 1.0) < 1e-9);
    CHECK(p.has_tag("trending"));
}

TEST_CASE("fully masked channel raises ChannelEmptyError naming it") {
    TimeSeriesWindow w;
    w.values = Matrix(8, 2, 1.0);
    w.mask = Matrix(8, 2, 0.0);
    for (int t = 0; t < 8; ++t) w.mask->at(t, 1) = 1.0;
    try {
        compute_statistics(w);
        FAIL("expected ChannelEmptyError");
    } catch (const ChannelEmptyError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("channel selection keeps everything when k >= D") {
    TimeSeriesWindow w;
    w.values = Matrix(20, 7);
    Rng rng(2);
    for (auto& v : w.values.v) v = rng.uniform(-1, 1);
    auto sel = select_channels(w, 10);
    CHECK(sel.size() == 7);
}

TEST_CASE("duplicate channels outrank independent noise in covariance selection") {
    Rng rng(3);
    TimeSeriesWindow w;
    w.values = Matrix(128, 4);
    for (int t = 0; t < 128; ++t) {
        double shared = std::sin(0.3 * t) * 3.0;
        w.values.at(t, 0) = shared;
        w.values.at(t, 1) = shared;
        w.values.at(t, 2) = rng.normal(0, 0.05);
        w.values.at(t, 3) = rng.normal(0, 0.05);
    }
    auto sel = select_channels(w, 2);
    REQUIRE(sel.size() == 2);
    CHECK(((sel[0] == 0 && sel[1] == 1) || (sel[0] == 1 && sel[1] == 0)));
}

TEST_CASE("single channel selects [0]") {
    TimeSeriesWindow w;
    w.values = Matrix(10, 1, 2.0);
    auto sel = select_channels(w, 10);
    REQUIRE(sel.size() == 1);
    CHECK(sel[0] == 0);
}

TEST_CASE("scaling values scales stats but not period, tags, or ranking") {
    SynthSpec spec;
    spec.kind = SynthKind::SinePlusTrend;
    spec.length = 96;
    spec.channels = 3;
    spec.noise = 0.05;
    auto w = synth_series(spec, 5);
    auto p1 = compute_statistics(w);
    TimeSeriesWindow scaled = w;
    for (auto& v : scaled.values.v) v *= 7.5;
    auto p2 = compute_statistics(scaled);

    for (int d = 0; d < 3; ++d) {
        CHECK(p2.stats[static_cast<std::size_t>(d)].mean ==
              doctest::Approx(7.5 * p1.stats[static_cast<std::size_t>(d)].mean).epsilon(1e-9));
        CHECK(p2.stats[static_cast<std::size_t>(d)].std ==
              doctest::Approx(7.5 * p1.stats[static_cast<std::size_t>(d)].std).epsilon(1e-9));
        CHECK(p2.stats[static_cast<std::size_t>(d)].min ==
              doctest::Approx(7.5 * p1.stats[static_cast<std::size_t>(d)].min).epsilon(1e-9));
        CHECK(p2.stats[static_cast<std::size_t>(d)].max ==
              doctest::Approx(7.5 * p1.stats[static_cast<std::size_t>(d)].max).epsilon(1e-9));
    }
    CHECK(p1.periodicity.has_value() == p2.periodicity.has_value());
    if (p1.periodicity) CHECK(p1.periodicity->period == p2.periodicity->period);
    CHECK(p1.semantic_tags == p2.semantic_tags);
    CHECK(p1.selected_channels == p2.selected_channels);
}

TEST_CASE("plot rendering is deterministic and marks masked columns") {
    SynthSpec spec;
    spec.kind = SynthKind::Sine;
    spec.length = 96;
    auto w = synth_series(spec, 0);
    w = apply_mask(w, 0.0, 0);
    w.mask->at(25, 0) = 1.0;
    w.values.at(25, 0) = 0.0;
    auto p = compute_statistics(w);

    PlotConfig cfg;
    auto img1 = render_plot(w, p, cfg);
    auto img2 = render_plot(w, p, cfg);
    CHECK(img1.png == img2.png);
    CHECK(img1.width >= 96);

    Canvas c = render_canvas(w, p, cfg);
    int x = plot_column_of(25, 96, c.width);
    bool found = false;
    for (int y = 0; y < c.height && !found; ++y)
        found = c.is(x, y, kMaskMarker[0], kMaskMarker[1], kMaskMarker[2]);
    CHECK(found);
}

TEST_CASE("png output starts with the png signature and ihdr") {
    Canvas c(16, 8);
    auto png = encode_png(c);
    REQUIRE(png.size() > 20);
    CHECK(png[0] == 137);
    CHECK(png[1] == 'P');
    CHECK(png[2] == 'N');
    CHECK(png[3] == 'G');
    CHECK(std::string(png.begin() + 12, png.begin() + 16) == "IHDR");
}

TEST_CASE("axis range covers channel range with 5% padding") {
    TimeSeriesWindow w;
    w.values = Matrix(32, 1);
    for (int t = 0; t < 32; ++t) w.values.at(t, 0) = t;  // range [0,31]
    auto p = compute_statistics(w);
    auto img = render_plot(w, p, {});
    CHECK(img.axis_low == doctest::Approx(0.0 - 0.05 * 31.0));
    CHECK(img.axis_high == doctest::Approx(31.0 + 0.05 * 31.0));
}
