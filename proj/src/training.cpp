#include "tsagent/training.hpp"

#include <algorithm>
#include <cmath>

namespace tsa {

TrainConfig TrainConfig::defaults(Task task) {
    TrainConfig cfg;
    cfg.task = task;
    switch (task) {
        case Task::Forecast:
            cfg.lr = 1e-4;
            cfg.batch_size = 32;
            cfg.epochs = 10;
            break;
        case Task::Impute:
            cfg.lr = 1e-3;
            cfg.batch_size = 16;
            cfg.epochs = 10;
            break;
        case Task::Classify:
            cfg.lr = 1e-3;
            cfg.batch_size = 16;
            cfg.epochs = 30;
            break;
        case Task::Detect:
            cfg.lr = 1e-4;
            cfg.batch_size = 128;
            cfg.epochs = 10;
            break;
    }
    return cfg;
}

namespace {

std::vector<std::vector<double>> snapshot_params(ParamStore& ps) {
    std::vector<std::vector<double>> snap;
    for (auto& p : ps.all_mut()) snap.push_back(p.data());
    return snap;
}

void restore_params(ParamStore& ps, const std::vector<std::vector<double>>& snap) {
    auto& all = ps.all_mut();
    for (std::size_t i = 0; i < all.size(); ++i) all[i].data_mut() = snap[i];
}

} // namespace

EvalResult evaluate(Engine& engine, const std::vector<TimeSeriesWindow>& windows,
                    const std::vector<std::size_t>& indices, int workers,
                    std::vector<WindowRecord>* records) {
    EvalResult res;
    res.windows = indices.size();
    if (indices.empty()) throw InsufficientDataError("evaluation split is empty");

    Task task = engine.config().task;

    // Warm the anchor cache up front so the parallel pass only reads it.
    engine.warm_anchor_cache_bulk(windows, indices);

    std::vector<WindowResult> outputs(indices.size());
    int n = static_cast<int>(indices.size());
#pragma omp parallel for schedule(static) num_threads(workers) if (workers > 1)
    for (int i = 0; i < n; ++i) {
        std::size_t idx = indices[static_cast<std::size_t>(i)];
        outputs[static_cast<std::size_t>(i)] = engine.run_window(windows[idx], idx, false);
    }

    double se = 0.0, ae = 0.0;
    long n_cells = 0;
    std::vector<int> pred_labels, true_labels;
    std::vector<double> all_scores;
    std::vector<int> all_labels;
    long fallbacks = 0;

    for (int i = 0; i < n; ++i) {
        std::size_t idx = indices[static_cast<std::size_t>(i)];
        const auto& w = windows[idx];
        auto& out = outputs[static_cast<std::size_t>(i)];
        if (out.prediction.fallback_used) ++fallbacks;
        if (records) {
            WindowRecord rec;
            rec.index = idx;
            rec.chains = out.executed_chains;
            rec.fallback = out.prediction.fallback_used;
            rec.corrections = out.prediction.corrections.size();
            rec.anchor_confidence = out.anchors.confidence;
            rec.anchors_from_oracle = out.anchors_from_oracle;
            rec.anchor_count = out.anchors.anchors.size();
            rec.anchor_warning = out.anchors.warning;
            rec.trace = out.prediction.chain_trace;
            records->push_back(std::move(rec));
        }
        switch (task) {
            case Task::Forecast: {
                const Matrix& y = *w.target;
                for (int t = 0; t < y.rows; ++t)
                    for (int d = 0; d < y.cols; ++d) {
                        double diff = out.prediction.value.data()[static_cast<std::size_t>(t) * y.cols + d] -
                                      y.at(t, d);
                        se += diff * diff;
                        ae += std::fabs(diff);
                        ++n_cells;
                    }
                break;
            }
            case Task::Impute: {
                const Matrix& truth = *w.truth;
                for (int t = 0; t < w.length(); ++t)
                    for (int d = 0; d < w.channels(); ++d) {
                        if (!w.is_masked(t, d)) continue;
                        double diff =
                            out.prediction.value.data()[static_cast<std::size_t>(t) * w.channels() + d] -
                            truth.at(t, d);
                        se += diff * diff;
                        ae += std::fabs(diff);
                        ++n_cells;
                    }
                break;
            }
            case Task::Classify: {
                pred_labels.push_back(predicted_label(out.prediction.value));
                true_labels.push_back(w.label.value_or(0));
                break;
            }
            case Task::Detect: {
                const auto& v = out.prediction.value.data();
                for (int t = 0; t < w.length(); ++t) {
                    all_scores.push_back(v[static_cast<std::size_t>(t)]);
                    all_labels.push_back(t < static_cast<int>(w.anomaly_labels.size())
                                             ? w.anomaly_labels[static_cast<std::size_t>(t)]
                                             : 0);
                }
                break;
            }
        }
    }

    res.fallback_rate = static_cast<double>(fallbacks) / static_cast<double>(indices.size());
    switch (task) {
        case Task::Forecast:
        case Task::Impute:
            if (n_cells > 0) {
                res.mse = se / static_cast<double>(n_cells);
                res.mae = ae / static_cast<double>(n_cells);
            }
            res.mask_cells = task == Task::Impute ? n_cells : 0;
            res.mean_task_loss = res.mse;
            break;
        case Task::Classify:
            res.accuracy = metric_accuracy(pred_labels, true_labels);
            res.mean_task_loss = 100.0 - res.accuracy;
            break;
        case Task::Detect: {
            double pct = engine.config().detect_threshold_percentile;
            if (pct >= 0.0) {
                std::vector<double> sorted = all_scores;
                std::sort(sorted.begin(), sorted.end());
                double pos = std::clamp(pct, 0.0, 100.0) / 100.0 *
                             (static_cast<double>(sorted.size()) - 1.0);
                double thr = sorted[static_cast<std::size_t>(pos)];
                res.best_threshold = thr;
                res.anomaly = metric_point_adjust_f1(all_scores, all_labels, thr);
            } else {
                auto [thr, rep] = best_f1_threshold(all_scores, all_labels);
                res.best_threshold = thr;
                res.anomaly = rep;
            }
            res.mean_task_loss = 1.0 - res.anomaly.f1;
            break;
        }
    }
    return res;
}

double validation_score(Engine& engine, const std::vector<TimeSeriesWindow>& windows,
                        const std::vector<std::size_t>& indices) {
    Task task = engine.config().task;
    if (task == Task::Detect) {
        // Unsupervised validation: mean reconstruction objective.
        double acc = 0.0;
        for (std::size_t idx : indices) {
            auto out = engine.run_window(windows[idx], idx, true);
            acc += out.task_loss;
        }
        return indices.empty() ? 0.0 : acc / static_cast<double>(indices.size());
    }
    return evaluate(engine, windows, indices).mean_task_loss;
}

TrainHistory train(Engine& engine, const std::vector<TimeSeriesWindow>& windows,
                   const SplitIndices& split, const TrainConfig& cfg) {
    if (split.train.empty()) throw InsufficientDataError("training split is empty");

    TrainHistory history;
    AdamWConfig ocfg;
    ocfg.lr = cfg.lr;
    AdamW opt(ocfg);
    ParamStore& ps = engine.params();

    std::vector<std::vector<double>> best_snapshot = snapshot_params(ps);
    Rng shuffle_rng = Rng::fork(cfg.seed, 0x7472);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);

        std::vector<std::size_t> order = split.train;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.randint(0, static_cast<std::int64_t>(i) - 1))]);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        ps.zero_grads();
        std::size_t in_batch = 0;
        for (std::size_t idx : order) {
            auto out = engine.run_window(windows[idx], idx, true);
            Tensor scaled = mul(out.loss, Tensor::scalar(1.0 / cfg.batch_size));
            backward(scaled);
            epoch_loss += out.task_loss;
            ++seen;
            if (++in_batch == static_cast<std::size_t>(cfg.batch_size)) {
                opt.step(ps, lr);
                ps.zero_grads();
                in_batch = 0;
            }
        }
        if (in_batch > 0) {
            opt.step(ps, lr);
            ps.zero_grads();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = seen ? epoch_loss / static_cast<double>(seen) : 0.0;
        stats.lr = lr;
        stats.val_score = split.val.empty() ? stats.train_loss
                                            : validation_score(engine, windows, split.val);
        history.epochs.push_back(stats);

        if (history.best_epoch < 0 || stats.val_score < history.best_val) {
            history.best_epoch = epoch;
            history.best_val = stats.val_score;
            best_snapshot = snapshot_params(ps);
        } else if (epoch - history.best_epoch >= cfg.patience) {
            history.early_stopped = true;
            break;
        }
    }

    restore_params(ps, best_snapshot);
    return history;
}

} // namespace tsa
