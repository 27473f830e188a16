#include "tsagent/signal.hpp"

#include "tsagent/errors.hpp"
#include "tsagent/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace tsa::signal {

std::vector<double> dft_amplitude(const std::vector<double>& x) {
    int n = static_cast<int>(x.size());
    int half = n / 2;
    std::vector<double> amp(static_cast<std::size_t>(half) + 1, 0.0);
    for (int k = 0; k <= half; ++k) {
        double re = 0.0, im = 0.0;
        for (int t = 0; t < n; ++t) {
            double ang = -2.0 * M_PI * k * t / n;
            re += x[static_cast<std::size_t>(t)] * std::cos(ang);
            im += x[static_cast<std::size_t>(t)] * std::sin(ang);
        }
        amp[static_cast<std::size_t>(k)] = std::sqrt(re * re + im * im);
    }
    return amp;
}

PeriodEstimate dominant_period(const std::vector<double>& x) {
    PeriodEstimate est;
    int n = static_cast<int>(x.size());
    if (n < 4) return est;
    auto amp = dft_amplitude(x);
    double total = 0.0;
    int best = 0;
    for (std::size_t k = 1; k < amp.size(); ++k) {
        total += amp[k];
        if (best == 0 || amp[k] > amp[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    if (best == 0 || total <= 0.0) return est;
    est.freq_index = best;
    est.period = std::max(2, static_cast<int>(std::lround(static_cast<double>(n) / best)));
    est.strength = amp[static_cast<std::size_t>(best)] / total;
    return est;
}

std::vector<PeriodEstimate> topk_periods(const std::vector<double>& x, int k) {
    int n = static_cast<int>(x.size());
    std::vector<PeriodEstimate> out;
    if (n < 4 || k <= 0) return out;
    auto amp = dft_amplitude(x);
    std::vector<int> order;
    for (int f = 1; f < static_cast<int>(amp.size()); ++f) order.push_back(f);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return amp[static_cast<std::size_t>(a)] > amp[static_cast<std::size_t>(b)]; });
    double total = 0.0;
    for (std::size_t f = 1; f < amp.size(); ++f) total += amp[f];
    if (total <= 0.0) return out;
    std::vector<int> seen_periods;
    for (int f : order) {
        int period = std::max(2, static_cast<int>(std::lround(static_cast<double>(n) / f)));
        if (period > n) period = n;
        if (std::find(seen_periods.begin(), seen_periods.end(), period) != seen_periods.end()) continue;
        seen_periods.push_back(period);
        PeriodEstimate e;
        e.period = period;
        e.freq_index = f;
        e.strength = amp[static_cast<std::size_t>(f)];
        out.push_back(e);
        if (static_cast<int>(out.size()) == k) break;
    }
    return out;
}

double least_squares_slope(const std::vector<double>& y) {
    int n = static_cast<int>(y.size());
    if (n < 2) return 0.0;
    double tm = (n - 1) / 2.0;
    double ym = mean_of(y);
    double num = 0.0, den = 0.0;
    for (int t = 0; t < n; ++t) {
        double dt = t - tm;
        num += dt * (y[static_cast<std::size_t>(t)] - ym);
        den += dt * dt;
    }
    return den > 0.0 ? num / den : 0.0;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

namespace {
double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    double idx = p * (static_cast<double>(sorted.size()) - 1.0);
    std::size_t lo = static_cast<std::size_t>(idx);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}
} // namespace

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return percentile(v, 0.5);
}

double iqr_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return percentile(v, 0.75) - percentile(v, 0.25);
}

std::vector<double> smooth(const std::vector<double>& x, int kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw ContractError("smooth: kernel must be odd");
    std::vector<double> out(x.size());
    kernels::ref::moving_average(x.data(), out.data(), static_cast<int>(x.size()), 1, kernel);
    return out;
}

std::vector<Extremum> local_extrema(const std::vector<double>& x) {
    std::vector<Extremum> out;
    int n = static_cast<int>(x.size());
    double lo = *std::min_element(x.begin(), x.end());
    double hi = *std::max_element(x.begin(), x.end());
    double range = std::max(hi - lo, 1e-12);
    for (int t = 1; t + 1 < n; ++t) {
        double prev = x[static_cast<std::size_t>(t - 1)];
        double cur = x[static_cast<std::size_t>(t)];
        double next = x[static_cast<std::size_t>(t + 1)];
        bool peak = cur > prev && cur >= next;
        bool valley = cur < prev && cur <= next;
        if (!peak && !valley) continue;
        Extremum e;
        e.t = t;
        e.v = cur;
        e.is_peak = peak;
        e.prominence = peak ? (cur - lo) / range : (hi - cur) / range;
        out.push_back(e);
    }
    return out;
}

std::vector<int> inflection_points(const std::vector<double>& x) {
    std::vector<int> out;
    int n = static_cast<int>(x.size());
    if (n < 4) return out;
    auto d2 = [&](int t) {
        return x[static_cast<std::size_t>(t + 1)] - 2.0 * x[static_cast<std::size_t>(t)] + x[static_cast<std::size_t>(t - 1)];
    };
    for (int t = 2; t + 1 < n; ++t) {
        double a = d2(t - 1), b = d2(t);
        if ((a > 0 && b < 0) || (a < 0 && b > 0)) out.push_back(t);
    }
    return out;
}

} // namespace tsa::signal
