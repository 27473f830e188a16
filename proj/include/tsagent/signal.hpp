#ifndef TSAGENT_SIGNAL_HPP
#define TSAGENT_SIGNAL_HPP

#include <vector>

namespace tsa::signal {

// Amplitude spectrum |X_k| for k = 0..n/2 (plain DFT; inputs are desk-scale).
std::vector<double> dft_amplitude(const std::vector<double>& x);

struct PeriodEstimate {
    int period = 0;        // in samples, >= 2 when valid
    double strength = 0.0; // peak amplitude / total non-DC amplitude
    int freq_index = 0;    // cycles per window
};

// Dominant period from the non-DC amplitude peak; period 0 when the spectrum
// is flat zero (constant input).
PeriodEstimate dominant_period(const std::vector<double>& x);

// Top-k distinct periods by amplitude with their amplitudes; used by the
// period-folding block. Values are detached from any gradient path.
std::vector<PeriodEstimate> topk_periods(const std::vector<double>& x, int k);

double least_squares_slope(const std::vector<double>& y);
double mean_of(const std::vector<double>& v);
double std_of(const std::vector<double>& v);
double median_of(std::vector<double> v);          // sorts a copy
double iqr_of(std::vector<double> v);             // interpolated quartiles

// Centered moving average with replicate padding (odd kernel).
std::vector<double> smooth(const std::vector<double>& x, int kernel);

struct Extremum {
    int t = 0;
    double v = 0.0;
    bool is_peak = false;
    double prominence = 0.0;
};
// Strict local extrema of the sequence; plateaus report their first index.
std::vector<Extremum> local_extrema(const std::vector<double>& x);

// Indices where the second difference changes sign.
std::vector<int> inflection_points(const std::vector<double>& x);

} // namespace tsa::signal

#endif // TSAGENT_SIGNAL_HPP
