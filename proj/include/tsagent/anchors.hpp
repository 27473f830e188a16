#ifndef TSAGENT_ANCHORS_HPP
#define TSAGENT_ANCHORS_HPP

#include "tsagent/dataset.hpp"
#include "tsagent/priors.hpp"

#include <string>
#include <vector>

namespace tsa {

// Sparse structural cue: time index, estimated value, local direction.
struct Anchor {
    int t = 0;
    double v = 0.0;
    int tau = 0;              // -1 falling, 0 stable, +1 rising
    std::string label;        // e.g. "peak", "valley", "start"
};

struct AnomalyScoreEntry {
    int t = 0;
    double score = 0.0;       // in [0,1]
    std::string reason;
};

struct ImputedValueEntry {
    int t = 0;
    double v = 0.0;
    std::string reason;       // "interpolation" | "extrapolation"
};

struct AnchorSet {
    Task task = Task::Forecast;
    double confidence = 0.0;
    std::vector<Anchor> anchors;                  // strictly increasing t
    std::string pattern_type;                     // classification extra
    std::vector<ImputedValueEntry> imputed_values; // imputation extra
    std::vector<AnomalyScoreEntry> anomaly_scores; // anomaly extra
    std::string warning;                           // e.g. below-minimum anchor count

    bool empty() const { return anchors.empty(); }
    // Dense per-step view of the sparse anomaly entries (0 where absent).
    std::vector<double> dense_anomaly_scores(int seq_len) const;
};

struct AnchorLimits {
    int max_anchors = 20;
    double confidence_threshold = 0.7;
};

// Window-derived context the anchor invariants are checked against.
struct WindowContext {
    int seq_len = 0;
    int horizon = 0;
    double history_min = 0.0;
    double history_max = 0.0;
    double history_std = 0.0;

    static WindowContext from(const TimeSeriesWindow& w, const PriorBundle& p) {
        return {w.length(), w.horizon, p.history_min, p.history_max, p.history_std};
    }
    double value_low() const { return history_min - 3.0 * history_std; }
    double value_high() const { return history_max + 3.0 * history_std; }
};

// Label -> direction bridge ("rising"/"peak" family -> +1, "falling"/"valley"
// family -> -1, everything else 0).
int tau_from_label(const std::string& label);

// Enforces every AnchorSet invariant: time-range filter per task, value
// clipping to the +-3 sigma envelope, strictly increasing t, max_anchors
// truncation (first by t), anomaly score clipping and the
// one-per-consecutive-run rule.
AnchorSet enforce_anchor_invariants(AnchorSet s, const WindowContext& ctx, const AnchorLimits& lim = {});

} // namespace tsa

#endif // TSAGENT_ANCHORS_HPP
