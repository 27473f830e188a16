#include "tsagent/priors.hpp"

#include <algorithm>
#include <cmath>

namespace tsa {

std::vector<int> select_channels(const TimeSeriesWindow& window, int k) {
    int L = window.length(), D = window.channels();
    // Covariance over observed-in-both rows, per channel pair.
    std::vector<double> means(static_cast<std::size_t>(D), 0.0);
    for (int d = 0; d < D; ++d) {
        std::vector<double> obs;
        for (int t = 0; t < L; ++t)
            if (!window.is_masked(t, d)) obs.push_back(window.values.at(t, d));
        means[static_cast<std::size_t>(d)] = signal::mean_of(obs);
    }
    std::vector<double> score(static_cast<std::size_t>(D), 0.0);
    for (int a = 0; a < D; ++a) {
        for (int b = 0; b < D; ++b) {
            if (a == b) continue;
            double cov = 0.0;
            int n = 0;
            for (int t = 0; t < L; ++t) {
                if (window.is_masked(t, a) || window.is_masked(t, b)) continue;
                cov += (window.values.at(t, a) - means[static_cast<std::size_t>(a)]) *
                       (window.values.at(t, b) - means[static_cast<std::size_t>(b)]);
                ++n;
            }
            if (n > 1) score[static_cast<std::size_t>(a)] += std::fabs(cov / n);
        }
    }
    std::vector<int> order(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) order[static_cast<std::size_t>(d)] = d;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });
    int take = std::min(k, D);
    order.resize(static_cast<std::size_t>(take));
    return order;
}

PriorBundle compute_statistics(const TimeSeriesWindow& window, const AnalyzerConfig& cfg) {
    window.validate();
    int L = window.length(), D = window.channels();
    PriorBundle p;
    p.stats.resize(static_cast<std::size_t>(D));
    p.trend_slope.resize(static_cast<std::size_t>(D));

    for (int d = 0; d < D; ++d) {
        std::vector<double> obs;
        std::vector<double> obs_t;
        for (int t = 0; t < L; ++t) {
            if (window.is_masked(t, d)) continue;
            obs.push_back(window.values.at(t, d));
            obs_t.push_back(static_cast<double>(t));
        }
        if (obs.empty())
            throw ChannelEmptyError("channel " + std::to_string(d) + " is fully masked");
        ChannelStats s;
        s.min = *std::min_element(obs.begin(), obs.end());
        s.max = *std::max_element(obs.begin(), obs.end());
        s.mean = signal::mean_of(obs);
        s.std = signal::std_of(obs);
        s.last_value = obs.back();
        p.stats[static_cast<std::size_t>(d)] = s;

        // Least-squares slope on observed (t, y) pairs.
        double tm = signal::mean_of(obs_t), ym = s.mean, num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            num += (obs_t[i] - tm) * (obs[i] - ym);
            den += (obs_t[i] - tm) * (obs_t[i] - tm);
        }
        p.trend_slope[static_cast<std::size_t>(d)] = den > 0.0 ? num / den : 0.0;
    }

    p.selected_channels = select_channels(window, cfg.top_k);
    if (window.mask) {
        p.mask_ratio = static_cast<double>(window.masked_count()) /
                       (static_cast<double>(L) * static_cast<double>(D));
    }

    // Mean channel over selected channels, observed entries only.
    p.mean_channel.resize(static_cast<std::size_t>(L), 0.0);
    for (int t = 0; t < L; ++t) {
        double acc = 0.0;
        int n = 0;
        for (int d : p.selected_channels) {
            if (window.is_masked(t, d)) continue;
            acc += window.values.at(t, d);
            ++n;
        }
        p.mean_channel[static_cast<std::size_t>(t)] =
            n > 0 ? acc / n : (t > 0 ? p.mean_channel[static_cast<std::size_t>(t - 1)] : 0.0);
    }

    // Aggregates over observed entries of the selected channels.
    std::vector<double> pool;
    for (int d : p.selected_channels)
        for (int t = 0; t < L; ++t)
            if (!window.is_masked(t, d)) pool.push_back(window.values.at(t, d));
    p.history_min = *std::min_element(pool.begin(), pool.end());
    p.history_max = *std::max_element(pool.begin(), pool.end());
    p.history_mean = signal::mean_of(pool);
    p.history_std = signal::std_of(pool);
    p.last_value = p.mean_channel.back();

    auto est = signal::dominant_period(p.mean_channel);
    if (est.period >= 2 && est.strength > 0.0) p.periodicity = Periodicity{est.period, est.strength};

    double slope = signal::least_squares_slope(p.mean_channel);
    double mc_std = signal::std_of(p.mean_channel);
    bool trending = std::fabs(slope) * L > cfg.trending_factor * mc_std && mc_std > 0.0;
    bool periodic = p.periodicity && p.periodicity->strength > cfg.periodic_strength;
    double iqr = signal::iqr_of(p.mean_channel);
    bool volat = mc_std > cfg.volatile_factor * iqr / 1.349 && mc_std > 0.0;
    if (trending) p.semantic_tags.insert("trending");
    if (periodic) p.semantic_tags.insert("periodic");
    if (volat) p.semantic_tags.insert("volatile");
    if (!trending && !periodic) p.semantic_tags.insert("stationary");

    double strength = p.periodicity ? p.periodicity->strength : 0.0;
    p.anchor_density_hint =
        std::clamp(2.0 + 10.0 * strength + 5.0 * std::fabs(slope), cfg.min_anchors, cfg.max_anchors);
    return p;
}

} // namespace tsa
