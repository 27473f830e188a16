#ifndef TSAGENT_PRIORS_HPP
#define TSAGENT_PRIORS_HPP

#include "tsagent/dataset.hpp"
#include "tsagent/signal.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tsa {

struct ChannelStats {
    double min = 0, max = 0, mean = 0, std = 0, last_value = 0;
};

struct Periodicity {
    int period = 0;        // >= 2
    double strength = 0.0; // in [0,1]
};

struct AnalyzerConfig {
    int top_k = 10;                   // channel selection budget
    double trending_factor = 0.5;     // trending iff |slope|*L > factor*std
    double periodic_strength = 0.2;
    double volatile_factor = 2.0;     // volatile iff std > factor*IQR/1.349
    double min_anchors = 2.0;
    double max_anchors = 20.0;
};

// Structured priors assembled by the Analyzer; a pure function of the window
// and config.
struct PriorBundle {
    std::vector<ChannelStats> stats;       // per channel
    std::vector<double> trend_slope;       // per channel
    std::optional<Periodicity> periodicity;
    double anchor_density_hint = 2.0;
    std::set<std::string> semantic_tags;
    std::vector<int> selected_channels;
    double mask_ratio = 0.0;

    // Aggregates over observed entries of the selected channels; these feed
    // the prompt placeholders and anchor bounds.
    double history_min = 0, history_max = 0, history_mean = 0, history_std = 0;
    double last_value = 0;

    // Mean-over-selected-channels series (the "plot trace" the reasoners
    // anchor against).
    std::vector<double> mean_channel;

    bool has_tag(const std::string& t) const { return semantic_tags.count(t) > 0; }
};

// Per-channel stats over observed entries, least-squares slopes, dominant
// periodicity of the mean channel, semantic tags, channel selection.
// Throws ChannelEmptyError naming the channel when a channel is fully masked.
PriorBundle compute_statistics(const TimeSeriesWindow& window, const AnalyzerConfig& cfg = {});

// Channels ranked by summed absolute covariance with all other channels,
// top min(k, D), ties broken by lower index.
std::vector<int> select_channels(const TimeSeriesWindow& window, int k = 10);

} // namespace tsa

#endif // TSAGENT_PRIORS_HPP
