#include "tsagent/oracle.hpp"

#include "tsagent/signal.hpp"

#include <algorithm>
#include <cmath>

namespace tsa {

namespace {

// Keeps the most prominent extrema within the budget, returned in t order.
std::vector<signal::Extremum> budget_extrema(std::vector<signal::Extremum> es, int budget) {
    if (static_cast<int>(es.size()) <= budget) return es;
    std::stable_sort(es.begin(), es.end(), [](const auto& a, const auto& b) {
        return a.prominence > b.prominence;
    });
    es.resize(static_cast<std::size_t>(budget));
    std::stable_sort(es.begin(), es.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    return es;
}

void push_unique(std::vector<Anchor>& anchors, Anchor a) {
    for (const auto& e : anchors)
        if (e.t == a.t) return;
    anchors.push_back(std::move(a));
}

} // namespace

std::vector<double> periodic_trend_extension(const std::vector<double>& history, int horizon,
                                             int period_hint) {
    int L = static_cast<int>(history.size());
    int period = period_hint;
    if (period < 2) {
        auto est = signal::dominant_period(history);
        period = est.period;
    }

    double slope, intercept;
    int n_cycles = period >= 2 ? L / period : 0;
    if (n_cycles >= 2) {
        // Trend from complete-cycle means; pointwise least squares on a
        // periodic signal picks up a spurious slope, cycle means do not.
        int t0 = L - n_cycles * period;
        std::vector<double> centers, means;
        for (int i = 0; i < n_cycles; ++i) {
            double acc = 0.0;
            for (int j = 0; j < period; ++j) acc += history[static_cast<std::size_t>(t0 + i * period + j)];
            means.push_back(acc / period);
            centers.push_back(t0 + i * period + (period - 1) / 2.0);
        }
        double cm = signal::mean_of(centers), mm = signal::mean_of(means);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < means.size(); ++i) {
            num += (centers[i] - cm) * (means[i] - mm);
            den += (centers[i] - cm) * (centers[i] - cm);
        }
        slope = den > 0.0 ? num / den : 0.0;
        intercept = mm - slope * cm;
    } else {
        slope = signal::least_squares_slope(history);
        intercept = signal::mean_of(history) - slope * (L - 1) / 2.0;
    }
    auto trend_at = [&](int t) { return intercept + slope * t; };

    std::vector<double> out(static_cast<std::size_t>(horizon), 0.0);
    if (period < 2 || period > L) {
        for (int h = 0; h < horizon; ++h) out[static_cast<std::size_t>(h)] = trend_at(L + h);
        return out;
    }

    // Phase-aligned cycle template from detrended samples.
    std::vector<double> cycle(static_cast<std::size_t>(period), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(period), 0);
    for (int t = 0; t < L; ++t) {
        int phase = t % period;
        cycle[static_cast<std::size_t>(phase)] += history[static_cast<std::size_t>(t)] - trend_at(t);
        counts[static_cast<std::size_t>(phase)] += 1;
    }
    for (int p = 0; p < period; ++p)
        if (counts[static_cast<std::size_t>(p)] > 0) cycle[static_cast<std::size_t>(p)] /= counts[static_cast<std::size_t>(p)];

    for (int h = 0; h < horizon; ++h) {
        int t = L + h;
        out[static_cast<std::size_t>(h)] = trend_at(t) + cycle[static_cast<std::size_t>(t % period)];
    }
    return out;
}

AnchorSet offline_anchor_oracle(const TimeSeriesWindow& window, const PriorBundle& bundle, Task task,
                                std::pair<int, int> anchor_range) {
    AnchorSet s;
    s.task = task;
    s.confidence = 0.99;
    int L = window.length();
    const auto& mc = bundle.mean_channel;
    auto smoothed = signal::smooth(mc, std::min(5, L % 2 == 0 ? L - 1 : L));
    int min_anchors = anchor_range.first, max_anchors = anchor_range.second;

    switch (task) {
        case Task::Forecast: {
            int H = window.horizon;
            int period = bundle.periodicity ? bundle.periodicity->period : 0;
            auto ext = periodic_trend_extension(mc, H, period);

            push_unique(s.anchors, {L, ext.empty() ? bundle.last_value : ext[0], 0, "start"});
            // Extrema of the extension, judged with boundary neighbors.
            std::vector<signal::Extremum> extrema;
            for (int h = 0; h < H; ++h) {
                double prev = h == 0 ? mc.back() : ext[static_cast<std::size_t>(h - 1)];
                double cur = ext[static_cast<std::size_t>(h)];
                double next = h + 1 < H ? ext[static_cast<std::size_t>(h + 1)] : cur;
                bool peak = cur > prev && cur >= next && h + 1 < H;
                bool valley = cur < prev && cur <= next && h + 1 < H;
                if (peak || valley)
                    extrema.push_back({L + h, cur, peak, std::fabs(cur - bundle.history_mean)});
            }
            extrema = budget_extrema(std::move(extrema), std::max(0, max_anchors - 2));
            for (const auto& e : extrema)
                push_unique(s.anchors, {e.t, e.v, e.is_peak ? 1 : -1, e.is_peak ? "peak" : "valley"});
            if (H > 1) push_unique(s.anchors, {L + H - 1, ext.back(), 0, "end"});

            // Top up with evenly spaced trajectory points if below the minimum.
            int stride = std::max(1, H / std::max(1, min_anchors));
            for (int h = stride; h < H && static_cast<int>(s.anchors.size()) < min_anchors; h += stride)
                push_unique(s.anchors, {L + h, ext[static_cast<std::size_t>(h)], 0, "inflection"});
            break;
        }
        case Task::Classify: {
            if (bundle.has_tag("periodic")) s.pattern_type = "periodic";
            else if (bundle.has_tag("trending")) s.pattern_type = "trending";
            else if (bundle.has_tag("volatile")) s.pattern_type = "volatile";
            else s.pattern_type = "stationary";
            auto extrema = budget_extrema(signal::local_extrema(smoothed), max_anchors);
            for (const auto& e : extrema) {
                const char* label = bundle.has_tag("periodic") ? (e.is_peak ? "period_peak" : "period_valley")
                                                               : (e.is_peak ? "peak" : "valley");
                push_unique(s.anchors, {e.t, mc[static_cast<std::size_t>(e.t)], e.is_peak ? 1 : -1, label});
            }
            for (int t : signal::inflection_points(smoothed)) {
                if (static_cast<int>(s.anchors.size()) >= min_anchors) break;
                push_unique(s.anchors, {t, mc[static_cast<std::size_t>(t)], 0, "inflection"});
            }
            push_unique(s.anchors, {0, mc.front(), 0, "start"});
            if (L > 1) push_unique(s.anchors, {L - 1, mc.back(), 0, "end"});
            break;
        }
        case Task::Impute: {
            if (window.mask) {
                for (int t = 0; t < L; ++t) {
                    bool any = false;
                    for (int d = 0; d < window.channels(); ++d) any = any || window.is_masked(t, d);
                    if (!any) continue;
                    // Linear interpolation between nearest fully/partly observed
                    // mean-channel neighbors.
                    int left = t - 1, right = t + 1;
                    auto observed_at = [&](int u) {
                        if (u < 0 || u >= L) return false;
                        for (int d = 0; d < window.channels(); ++d)
                            if (!window.is_masked(u, d)) return true;
                        return false;
                    };
                    while (left >= 0 && !observed_at(left)) --left;
                    while (right < L && !observed_at(right)) ++right;
                    double v;
                    std::string reason;
                    if (left >= 0 && right < L) {
                        double frac = static_cast<double>(t - left) / (right - left);
                        v = mc[static_cast<std::size_t>(left)] * (1 - frac) + mc[static_cast<std::size_t>(right)] * frac;
                        reason = "interpolation";
                    } else if (left >= 0) {
                        v = mc[static_cast<std::size_t>(left)];
                        reason = "extrapolation";
                    } else if (right < L) {
                        v = mc[static_cast<std::size_t>(right)];
                        reason = "extrapolation";
                    } else {
                        v = bundle.history_mean;
                        reason = "extrapolation";
                    }
                    s.imputed_values.push_back({t, v, reason});
                    if (left >= 0) push_unique(s.anchors, {left, mc[static_cast<std::size_t>(left)], 0, "observed"});
                    if (right < L) push_unique(s.anchors, {right, mc[static_cast<std::size_t>(right)], 0, "observed"});
                }
            }
            std::stable_sort(s.anchors.begin(), s.anchors.end(),
                             [](const Anchor& a, const Anchor& b) { return a.t < b.t; });
            break;
        }
        case Task::Detect: {
            double mu = signal::mean_of(mc);
            double sd = std::max(signal::std_of(mc), 1e-12);
            std::vector<double> z(static_cast<std::size_t>(L));
            double zmax = 0.0;
            for (int t = 0; t < L; ++t) {
                z[static_cast<std::size_t>(t)] = std::fabs(mc[static_cast<std::size_t>(t)] - mu) / sd;
                zmax = std::max(zmax, z[static_cast<std::size_t>(t)]);
            }
            if (zmax > 0.0) {
                for (int t = 0; t < L; ++t) {
                    double score = z[static_cast<std::size_t>(t)] / zmax;
                    if (score > 0.5)
                        s.anomaly_scores.push_back({t, score, score > 0.9 ? "spike" : "deviation"});
                }
            }
            auto extrema = budget_extrema(signal::local_extrema(smoothed), max_anchors / 2);
            for (const auto& e : extrema)
                push_unique(s.anchors, {e.t, mc[static_cast<std::size_t>(e.t)], e.is_peak ? 1 : -1, "normal"});
            for (const auto& a : s.anomaly_scores) {
                if (a.score > 0.9)
                    push_unique(s.anchors, {a.t, mc[static_cast<std::size_t>(a.t)], 0, "anomaly"});
            }
            std::stable_sort(s.anchors.begin(), s.anchors.end(),
                             [](const Anchor& a, const Anchor& b) { return a.t < b.t; });
            break;
        }
    }

    AnchorLimits lim;
    lim.max_anchors = std::min(20, std::max(max_anchors, 1));
    return enforce_anchor_invariants(std::move(s), WindowContext::from(window, bundle), lim);
}

} // namespace tsa
