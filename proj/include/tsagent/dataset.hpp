#ifndef TSAGENT_DATASET_HPP
#define TSAGENT_DATASET_HPP

#include "tsagent/errors.hpp"
#include "tsagent/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tsa {

enum class Task { Forecast, Classify, Impute, Detect };

std::string task_name(Task t);
Task task_from_string(const std::string& s);

// Plain row-major value matrix for data plumbing (no gradient tracking).
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::vector<double> column(int c) const;
    std::vector<double> row(int r) const;
};

struct TimeSeriesWindow {
    Matrix values;                       // L x D; masked cells hold 0
    int horizon = 0;                     // H
    std::optional<Matrix> target;        // H x D forecast target
    std::optional<int> label;            // class label, 0-based
    std::vector<int> anomaly_labels;     // per-step 0/1 when present
    std::optional<Matrix> mask;          // L x D, 1 = missing
    std::optional<Matrix> truth;         // pre-mask values (imputation ground truth)

    int length() const { return values.rows; }
    int channels() const { return values.cols; }
    bool is_masked(int t, int d) const {
        return mask.has_value() && mask->at(t, d) != 0.0;
    }
    int masked_count() const;
    void validate() const;               // L >= 1, D >= 1, mask shape matches
};

// -- normalization -----------------------------------------------------------

enum class NormStrategy { RevIn, ChannelIndependent, Robust };

NormStrategy norm_strategy_from_string(const std::string& s);
std::string norm_strategy_name(NormStrategy s);

struct NormState {
    NormStrategy strategy = NormStrategy::RevIn;
    std::vector<double> location;  // per channel
    std::vector<double> scale;     // per channel, epsilon-floored > 0
};

// Per-window statistics over observed entries only; masked cells untouched.
std::pair<TimeSeriesWindow, NormState> normalize(const TimeSeriesWindow& w, NormStrategy strategy);
Matrix denormalize(const Matrix& x, const NormState& state);
Matrix normalize_matrix(const Matrix& x, const NormState& state);

// -- loading / windowing -------------------------------------------------------

struct ColumnSpec {
    char delimiter = ',';
    bool has_header = true;
    int timestamp_col = 0;
};

// Full-resolution series as loaded, plus optional labels.
struct RawSeries {
    Matrix values;                    // T x D
    std::vector<int> anomaly_labels;  // length T when present
    std::optional<int> label;
};

RawSeries load_series(const std::string& path, const ColumnSpec& schema);

// Stride-1 windows; forecasting windows carry an H x D target.
std::vector<TimeSeriesWindow> make_windows(const RawSeries& series, int seq_len, int horizon, Task task);

std::vector<TimeSeriesWindow> load_dataset(const std::string& path, const ColumnSpec& schema,
                                           int seq_len, int horizon, Task task);

struct SplitRatios {
    double train = 0.7, val = 0.1, test = 0.2;
};

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

// Chronological split over the window list.
SplitIndices chronological_split(std::size_t n, const SplitRatios& ratios);

// -- masking -------------------------------------------------------------------

// Marks exactly round(ratio * L * D) cells missing (uniform without
// replacement, seeded); original values retained in .truth.
TimeSeriesWindow apply_mask(const TimeSeriesWindow& w, double ratio, std::uint64_t seed);

// -- synthetic generators --------------------------------------------------------

enum class SynthKind { Sine, SinePlusTrend, RegimeShift, SpikeAnomaly, Constant };

SynthKind synth_kind_from_string(const std::string& s);

struct SynthSpec {
    SynthKind kind = SynthKind::Sine;
    int length = 96;
    int channels = 1;
    double period = 12.0;
    double amplitude = 1.0;
    double trend = 0.02;
    double noise = 0.0;
    double level = 5.0;                 // constant kind
    std::vector<int> spike_positions;   // anomaly kind
    int spike_from = 0;                 // synthetic protocol: clean before this row
    double phase = 0.0;
};

// Deterministic given the seed; anomaly kinds carry ground-truth labels.
TimeSeriesWindow synth_series(const SynthSpec& spec, std::uint64_t seed);

} // namespace tsa

#endif // TSAGENT_DATASET_HPP
