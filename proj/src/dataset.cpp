#include "tsagent/dataset.hpp"

#include "tsagent/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsa {

std::string task_name(Task t) {
    switch (t) {
        case Task::Forecast: return "forecast";
        case Task::Classify: return "classify";
        case Task::Impute: return "impute";
        case Task::Detect: return "detect";
    }
    return "?";
}

Task task_from_string(const std::string& s) {
    if (s == "forecast") return Task::Forecast;
    if (s == "classify") return Task::Classify;
    if (s == "impute") return Task::Impute;
    if (s == "detect") return Task::Detect;
    throw ConfigError("unknown task '" + s + "' (expected forecast|classify|impute|detect)");
}

std::vector<double> Matrix::column(int c) const {
    std::vector<double> out(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) out[static_cast<std::size_t>(r)] = at(r, c);
    return out;
}

std::vector<double> Matrix::row(int r) const {
    std::vector<double> out(static_cast<std::size_t>(cols));
    for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(c)] = at(r, c);
    return out;
}

int TimeSeriesWindow::masked_count() const {
    if (!mask) return 0;
    int n = 0;
    for (double m : mask->v) n += m != 0.0 ? 1 : 0;
    return n;
}

void TimeSeriesWindow::validate() const {
    if (values.rows < 1 || values.cols < 1)
        throw ContractError("window must have L >= 1 and D >= 1");
    if (mask && (mask->rows != values.rows || mask->cols != values.cols))
        throw ShapeError("mask shape must equal values shape");
    if (!anomaly_labels.empty() && static_cast<int>(anomaly_labels.size()) != values.rows)
        throw ShapeError("anomaly label vector must have length L");
}

// -- normalization -----------------------------------------------------------

NormStrategy norm_strategy_from_string(const std::string& s) {
    if (s == "revin") return NormStrategy::RevIn;
    if (s == "channel_independent") return NormStrategy::ChannelIndependent;
    if (s == "robust") return NormStrategy::Robust;
    throw ConfigError("unknown normalization strategy '" + s + "'");
}

std::string norm_strategy_name(NormStrategy s) {
    switch (s) {
        case NormStrategy::RevIn: return "revin";
        case NormStrategy::ChannelIndependent: return "channel_independent";
        case NormStrategy::Robust: return "robust";
    }
    return "?";
}

std::pair<TimeSeriesWindow, NormState> normalize(const TimeSeriesWindow& w, NormStrategy strategy) {
    w.validate();
    NormState st;
    st.strategy = strategy;
    int L = w.length(), D = w.channels();
    st.location.resize(static_cast<std::size_t>(D));
    st.scale.resize(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        std::vector<double> observed;
        observed.reserve(static_cast<std::size_t>(L));
        for (int t = 0; t < L; ++t)
            if (!w.is_masked(t, d)) observed.push_back(w.values.at(t, d));
        if (observed.empty())
            throw ChannelEmptyError("channel " + std::to_string(d) + " has no observed values");
        double loc, sc;
        if (strategy == NormStrategy::Robust) {
            loc = signal::median_of(observed);
            sc = signal::iqr_of(observed);
        } else {
            loc = signal::mean_of(observed);
            sc = signal::std_of(observed);
        }
        st.location[static_cast<std::size_t>(d)] = loc;
        st.scale[static_cast<std::size_t>(d)] = std::max(sc, 1e-8);
    }
    TimeSeriesWindow out = w;
    for (int t = 0; t < L; ++t)
        for (int d = 0; d < D; ++d)
            if (!w.is_masked(t, d))
                out.values.at(t, d) = (w.values.at(t, d) - st.location[static_cast<std::size_t>(d)]) /
                                      st.scale[static_cast<std::size_t>(d)];
    return {out, st};
}

Matrix denormalize(const Matrix& x, const NormState& state) {
    if (x.cols != static_cast<int>(state.location.size()))
        throw ShapeError("denormalize: channel count mismatch");
    Matrix out = x;
    for (int t = 0; t < x.rows; ++t)
        for (int d = 0; d < x.cols; ++d)
            out.at(t, d) = x.at(t, d) * state.scale[static_cast<std::size_t>(d)] +
                           state.location[static_cast<std::size_t>(d)];
    return out;
}

Matrix normalize_matrix(const Matrix& x, const NormState& state) {
    if (x.cols != static_cast<int>(state.location.size()))
        throw ShapeError("normalize_matrix: channel count mismatch");
    Matrix out = x;
    for (int t = 0; t < x.rows; ++t)
        for (int d = 0; d < x.cols; ++d)
            out.at(t, d) = (x.at(t, d) - state.location[static_cast<std::size_t>(d)]) /
                           state.scale[static_cast<std::size_t>(d)];
    return out;
}

// -- loading ------------------------------------------------------------------

RawSeries load_series(const std::string& path, const ColumnSpec& schema) {
    std::ifstream is(path);
    if (!is) throw ContractError("cannot open dataset file '" + path + "'");
    std::string line;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    int ncols = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line_no == 1 && schema.has_header) continue;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, schema.delimiter)) {
            if (col != schema.timestamp_col) {
                try {
                    std::size_t pos = 0;
                    double v = std::stod(cell, &pos);
                    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
                    if (pos != cell.size()) throw std::invalid_argument(cell);
                    row.push_back(v);
                } catch (const std::exception&) {
                    throw ParseError("non-numeric cell at row " + std::to_string(line_no) + " column " +
                                     std::to_string(col + 1) + ": '" + cell + "'");
                }
            }
            ++col;
        }
        if (ncols < 0) ncols = static_cast<int>(row.size());
        else if (static_cast<int>(row.size()) != ncols)
            throw ParseError("ragged row at line " + std::to_string(line_no));
        rows.push_back(std::move(row));
    }
    RawSeries out;
    out.values = Matrix(static_cast<int>(rows.size()), std::max(ncols, 0));
    for (int r = 0; r < out.values.rows; ++r)
        for (int c = 0; c < out.values.cols; ++c) out.values.at(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return out;
}

std::vector<TimeSeriesWindow> make_windows(const RawSeries& series, int seq_len, int horizon, Task task) {
    int T = series.values.rows;
    int need = seq_len + (task == Task::Forecast ? horizon : 0);
    if (T < need)
        throw InsufficientDataError("need at least " + std::to_string(need) + " rows, have " + std::to_string(T));
    int D = series.values.cols;
    int n = T - need + 1;
    std::vector<TimeSeriesWindow> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        TimeSeriesWindow w;
        w.values = Matrix(seq_len, D);
        for (int t = 0; t < seq_len; ++t)
            for (int d = 0; d < D; ++d) w.values.at(t, d) = series.values.at(s + t, d);
        if (task == Task::Forecast) {
            w.horizon = horizon;
            Matrix y(horizon, D);
            for (int t = 0; t < horizon; ++t)
                for (int d = 0; d < D; ++d) y.at(t, d) = series.values.at(s + seq_len + t, d);
            w.target = std::move(y);
        }
        if (!series.anomaly_labels.empty() && task == Task::Detect) {
            w.anomaly_labels.assign(series.anomaly_labels.begin() + s,
                                    series.anomaly_labels.begin() + s + seq_len);
        }
        if (series.label) w.label = series.label;
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<TimeSeriesWindow> load_dataset(const std::string& path, const ColumnSpec& schema,
                                           int seq_len, int horizon, Task task) {
    return make_windows(load_series(path, schema), seq_len, horizon, task);
}

SplitIndices chronological_split(std::size_t n, const SplitRatios& ratios) {
    SplitIndices s;
    std::size_t n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_train) s.train.push_back(i);
        else if (i < n_train + n_val) s.val.push_back(i);
        else s.test.push_back(i);
    }
    return s;
}

// -- masking -------------------------------------------------------------------

TimeSeriesWindow apply_mask(const TimeSeriesWindow& w, double ratio, std::uint64_t seed) {
    if (ratio < 0.0 || ratio > 1.0) throw ContractError("mask ratio must lie in [0,1]");
    w.validate();
    TimeSeriesWindow out = w;
    int L = w.length(), D = w.channels();
    std::size_t cells = static_cast<std::size_t>(L) * static_cast<std::size_t>(D);
    std::size_t k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(cells)));
    out.truth = w.values;
    out.mask = Matrix(L, D, 0.0);
    if (k == 0) return out;
    Rng rng = Rng::fork(seed, 0x6d61736b);
    auto chosen = rng.sample_without_replacement(cells, k);
    for (std::size_t idx : chosen) {
        int t = static_cast<int>(idx) / D;
        int d = static_cast<int>(idx) % D;
        out.mask->at(t, d) = 1.0;
        out.values.at(t, d) = 0.0;
    }
    return out;
}

// -- synthetic -------------------------------------------------------------------

SynthKind synth_kind_from_string(const std::string& s) {
    if (s == "sine") return SynthKind::Sine;
    if (s == "sine_plus_trend") return SynthKind::SinePlusTrend;
    if (s == "regime_shift") return SynthKind::RegimeShift;
    if (s == "spike_anomaly") return SynthKind::SpikeAnomaly;
    if (s == "constant") return SynthKind::Constant;
    throw ConfigError("unknown synthetic kind '" + s + "'");
}

TimeSeriesWindow synth_series(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.length < 1 || spec.channels < 1) throw ContractError("synth_series: bad dimensions");
    Rng rng = Rng::fork(seed, 0x73796e);
    TimeSeriesWindow w;
    w.values = Matrix(spec.length, spec.channels);
    for (int d = 0; d < spec.channels; ++d) {
        double phase = spec.phase + d * 0.7;
        for (int t = 0; t < spec.length; ++t) {
            double v = 0.0;
            switch (spec.kind) {
                case SynthKind::Sine:
                    v = spec.amplitude * std::sin(2.0 * M_PI * t / spec.period + phase);
                    break;
                case SynthKind::SinePlusTrend:
                    v = spec.amplitude * std::sin(2.0 * M_PI * t / spec.period + phase) + spec.trend * t;
                    break;
                case SynthKind::RegimeShift:
                    v = (t < spec.length / 2 ? 0.0 : 2.0 * spec.amplitude) +
                        0.3 * spec.amplitude * std::sin(2.0 * M_PI * t / spec.period + phase);
                    break;
                case SynthKind::SpikeAnomaly:
                    v = spec.amplitude * std::sin(2.0 * M_PI * t / spec.period + phase);
                    break;
                case SynthKind::Constant:
                    v = spec.level;
                    break;
            }
            if (spec.noise > 0.0) v += rng.normal(0.0, spec.noise);
            w.values.at(t, d) = v;
        }
    }
    if (spec.kind == SynthKind::SpikeAnomaly) {
        w.anomaly_labels.assign(static_cast<std::size_t>(spec.length), 0);
        for (int pos : spec.spike_positions) {
            if (pos < 0 || pos >= spec.length) throw ContractError("spike position out of range");
            for (int d = 0; d < spec.channels; ++d) w.values.at(pos, d) += 5.0 * spec.amplitude;
            w.anomaly_labels[static_cast<std::size_t>(pos)] = 1;
        }
    }
    return w;
}

} // namespace tsa
