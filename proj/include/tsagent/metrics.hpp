#ifndef TSAGENT_METRICS_HPP
#define TSAGENT_METRICS_HPP

#include "tsagent/dataset.hpp"

#include <utility>
#include <vector>

namespace tsa {

// MSE = 1/(H*C) sum (x - xhat)^2, MAE likewise with absolute values.
std::pair<double, double> metric_mse_mae(const Matrix& pred, const Matrix& target);

// Percent correct; empty input is a contract violation.
double metric_accuracy(const std::vector<int>& pred_labels, const std::vector<int>& true_labels);

struct PointAdjustReport {
    // raw counts at the threshold
    long raw_tp = 0, raw_fp = 0, raw_fn = 0;
    double raw_precision = 0, raw_recall = 0, raw_f1 = 0;
    // counts after segment adjustment
    long tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;
    bool point_adjust = true;
    double threshold = 0.0;
};

// Binarize scores at the threshold, credit whole labeled segments containing
// at least one flagged point, then count. P/R/F1 are 0 by convention when
// undefined.
PointAdjustReport metric_point_adjust_f1(const std::vector<double>& scores,
                                         const std::vector<int>& labels, double threshold);

// Best-F1 threshold sweep over the candidate score values.
std::pair<double, PointAdjustReport> best_f1_threshold(const std::vector<double>& scores,
                                                       const std::vector<int>& labels);

} // namespace tsa

#endif // TSAGENT_METRICS_HPP
