#ifndef TSAGENT_TRAINING_HPP
#define TSAGENT_TRAINING_HPP

#include "tsagent/metrics.hpp"
#include "tsagent/optimizer.hpp"
#include "tsagent/pipeline.hpp"

#include <string>
#include <vector>

namespace tsa {

struct TrainConfig {
    Task task = Task::Forecast;
    double lr = 1e-4;
    int batch_size = 32;
    int epochs = 10;
    double lambda_com = 0.01;
    int patience = 3;
    std::uint64_t seed = 0;

    // Task-specific defaults (forecast 1e-4/32/10, imputation 1e-3/16/10,
    // classification 1e-3/16/30, anomaly 1e-4/128/10).
    static TrainConfig defaults(Task task);
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_score = 0.0;  // lower is better for every task
    double lr = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val = 0.0;
    bool early_stopped = false;
};

// Seeded training loop: per-epoch validation, cosine annealing to lr/100,
// early stop after `patience` epochs without improvement, best parameters
// restored at the end.
TrainHistory train(Engine& engine, const std::vector<TimeSeriesWindow>& windows,
                   const SplitIndices& split, const TrainConfig& cfg);

struct EvalResult {
    double mse = 0.0, mae = 0.0;          // forecast / imputation
    double accuracy = 0.0;                // classification
    PointAdjustReport anomaly;            // detection
    double best_threshold = 0.0;
    std::size_t windows = 0;
    long mask_cells = 0;                  // imputation bookkeeping
    double fallback_rate = 0.0;
    double mean_task_loss = 0.0;
};

// Per-window audit record for run reports.
struct WindowRecord {
    std::size_t index = 0;
    std::string chains;
    bool fallback = false;
    std::size_t corrections = 0;
    double anchor_confidence = 0.0;
    bool anchors_from_oracle = true;
    std::size_t anchor_count = 0;
    std::string anchor_warning;
    std::vector<ChainStepTrace> trace;
};

// Inference over the given windows with task metrics. With workers > 1 the
// windows are processed in parallel (anchors are warmed serially first);
// results are aggregated in index order, so reports stay deterministic.
EvalResult evaluate(Engine& engine, const std::vector<TimeSeriesWindow>& windows,
                    const std::vector<std::size_t>& indices, int workers = 1,
                    std::vector<WindowRecord>* records = nullptr);

// Scalar "lower is better" validation score per task.
double validation_score(Engine& engine, const std::vector<TimeSeriesWindow>& windows,
                        const std::vector<std::size_t>& indices);

} // namespace tsa

#endif // TSAGENT_TRAINING_HPP
