#ifndef TSAGENT_ORACLE_HPP
#define TSAGENT_ORACLE_HPP

#include "tsagent/anchors.hpp"
#include "tsagent/prompts.hpp"

namespace tsa {

// Deterministic signal-processing substitute for the VLM anchor stage. Peaks
// and valleys come from a smoothed mean channel, inflections from second
// differences; forecasting anchors sit on the periodic extrapolation of the
// detected cycle plus the trend line. Confidence is fixed at 0.99.
AnchorSet offline_anchor_oracle(const TimeSeriesWindow& window, const PriorBundle& bundle, Task task,
                                std::pair<int, int> anchor_range);

inline AnchorSet offline_anchor_oracle(const TimeSeriesWindow& window, const PriorBundle& bundle,
                                       Task task) {
    return offline_anchor_oracle(window, bundle, task, default_anchor_range(task));
}

// The periodic-plus-trend extension used for forecasting anchors, exposed so
// tests can compare anchors against the analytic continuation.
std::vector<double> periodic_trend_extension(const std::vector<double>& history, int horizon,
                                             int period_hint);

} // namespace tsa

#endif // TSAGENT_ORACLE_HPP
