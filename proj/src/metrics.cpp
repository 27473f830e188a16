#include "tsagent/metrics.hpp"

#include "tsagent/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tsa {

std::pair<double, double> metric_mse_mae(const Matrix& pred, const Matrix& target) {
    if (pred.rows != target.rows || pred.cols != target.cols)
        throw ShapeError("metric_mse_mae: shape mismatch");
    double mse = 0.0, mae = 0.0;
    std::size_t n = pred.v.size();
    if (n == 0) throw ContractError("metric_mse_mae: empty input");
    for (std::size_t i = 0; i < n; ++i) {
        double d = pred.v[i] - target.v[i];
        mse += d * d;
        mae += std::fabs(d);
    }
    return {mse / static_cast<double>(n), mae / static_cast<double>(n)};
}

double metric_accuracy(const std::vector<int>& pred_labels, const std::vector<int>& true_labels) {
    if (pred_labels.empty()) throw ContractError("metric_accuracy: empty input");
    if (pred_labels.size() != true_labels.size())
        throw ShapeError("metric_accuracy: length mismatch");
    long correct = 0;
    for (std::size_t i = 0; i < pred_labels.size(); ++i)
        if (pred_labels[i] == true_labels[i]) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(pred_labels.size());
}

namespace {
void prf(long tp, long fp, long fn, double& p, double& r, double& f1) {
    p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    f1 = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}
} // namespace

PointAdjustReport metric_point_adjust_f1(const std::vector<double>& scores,
                                         const std::vector<int>& labels, double threshold) {
    if (scores.size() != labels.size())
        throw ShapeError("point_adjust: scores and labels differ in length");
    std::size_t n = scores.size();
    std::vector<int> pred(n, 0);
    for (std::size_t i = 0; i < n; ++i) pred[i] = scores[i] >= threshold ? 1 : 0;

    PointAdjustReport rep;
    rep.threshold = threshold;
    for (std::size_t i = 0; i < n; ++i) {
        if (pred[i] && labels[i]) ++rep.raw_tp;
        else if (pred[i] && !labels[i]) ++rep.raw_fp;
        else if (!pred[i] && labels[i]) ++rep.raw_fn;
    }
    prf(rep.raw_tp, rep.raw_fp, rep.raw_fn, rep.raw_precision, rep.raw_recall, rep.raw_f1);

    // Point adjust: any hit inside a labeled segment credits the segment.
    std::vector<int> adjusted = pred;
    std::size_t i = 0;
    while (i < n) {
        if (!labels[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        bool hit = false;
        while (j < n && labels[j]) hit = hit || adjusted[j] == 1, ++j;
        if (hit)
            for (std::size_t k = i; k < j; ++k) adjusted[k] = 1;
        i = j;
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (adjusted[k] && labels[k]) ++rep.tp;
        else if (adjusted[k] && !labels[k]) ++rep.fp;
        else if (!adjusted[k] && labels[k]) ++rep.fn;
    }
    prf(rep.tp, rep.fp, rep.fn, rep.precision, rep.recall, rep.f1);
    return rep;
}

std::pair<double, PointAdjustReport> best_f1_threshold(const std::vector<double>& scores,
                                                       const std::vector<int>& labels) {
    std::vector<double> candidates = scores;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best_t = candidates.empty() ? 0.0 : candidates.front();
    PointAdjustReport best;
    bool first = true;
    for (double t : candidates) {
        auto rep = metric_point_adjust_f1(scores, labels, t);
        if (first || rep.f1 > best.f1) {
            best = rep;
            best_t = t;
            first = false;
        }
    }
    if (first) best = metric_point_adjust_f1(scores, labels, 0.0);
    return {best_t, best};
}

} // namespace tsa
