#include "tsagent/anchors.hpp"

#include <algorithm>
#include <cmath>

namespace tsa {

std::vector<double> AnchorSet::dense_anomaly_scores(int seq_len) const {
    std::vector<double> out(static_cast<std::size_t>(seq_len), 0.0);
    for (const auto& e : anomaly_scores)
        if (e.t >= 0 && e.t < seq_len) out[static_cast<std::size_t>(e.t)] = e.score;
    return out;
}

int tau_from_label(const std::string& label) {
    static const char* rising[] = {"rising", "increasing", "peak", "period_peak", "up"};
    static const char* falling[] = {"falling", "decreasing", "valley", "period_valley", "down"};
    for (const char* r : rising)
        if (label == r) return 1;
    for (const char* f : falling)
        if (label == f) return -1;
    return 0;
}

AnchorSet enforce_anchor_invariants(AnchorSet s, const WindowContext& ctx, const AnchorLimits& lim) {
    int t_lo = s.task == Task::Forecast ? ctx.seq_len : 0;
    int t_hi = s.task == Task::Forecast ? ctx.seq_len + ctx.horizon : ctx.seq_len;
    double v_lo = ctx.value_low(), v_hi = ctx.value_high();

    std::vector<Anchor> kept;
    for (auto a : s.anchors) {
        if (a.t < t_lo || a.t >= t_hi) continue;  // out of time range: dropped
        a.v = std::clamp(a.v, v_lo, v_hi);        // out of value bound: clipped
        a.tau = std::clamp(a.tau, -1, 1);
        kept.push_back(a);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const Anchor& a, const Anchor& b) { return a.t < b.t; });
    std::vector<Anchor> unique;
    for (auto& a : kept)
        if (unique.empty() || unique.back().t != a.t) unique.push_back(a);
    if (static_cast<int>(unique.size()) > lim.max_anchors) unique.resize(static_cast<std::size_t>(lim.max_anchors));
    s.anchors = std::move(unique);

    // Anomaly extras: clip to [0,1], de-duplicate, keep only the strongest
    // entry within any run of adjacent flagged steps.
    if (!s.anomaly_scores.empty()) {
        std::vector<AnomalyScoreEntry> es;
        for (auto e : s.anomaly_scores) {
            if (e.t < 0 || e.t >= ctx.seq_len) continue;
            e.score = std::clamp(e.score, 0.0, 1.0);
            es.push_back(e);
        }
        std::stable_sort(es.begin(), es.end(),
                         [](const AnomalyScoreEntry& a, const AnomalyScoreEntry& b) { return a.t < b.t; });
        std::vector<AnomalyScoreEntry> collapsed;
        std::size_t i = 0;
        while (i < es.size()) {
            std::size_t j = i;
            AnomalyScoreEntry best = es[i];
            while (j + 1 < es.size() && es[j + 1].t == es[j].t + 1) {
                ++j;
                if (es[j].score > best.score) best = es[j];
            }
            collapsed.push_back(best);
            i = j + 1;
        }
        s.anomaly_scores = std::move(collapsed);
    }

    // Imputation extras stay within the observed window.
    if (!s.imputed_values.empty()) {
        std::vector<ImputedValueEntry> iv;
        for (auto e : s.imputed_values) {
            if (e.t < 0 || e.t >= ctx.seq_len) continue;
            e.v = std::clamp(e.v, v_lo, v_hi);
            iv.push_back(e);
        }
        std::stable_sort(iv.begin(), iv.end(),
                         [](const ImputedValueEntry& a, const ImputedValueEntry& b) { return a.t < b.t; });
        s.imputed_values = std::move(iv);
    }

    s.confidence = std::clamp(s.confidence, 0.0, 1.0);
    return s;
}

} // namespace tsa
