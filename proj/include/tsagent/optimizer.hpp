#ifndef TSAGENT_OPTIMIZER_HPP
#define TSAGENT_OPTIMIZER_HPP

#include "tsagent/tensor.hpp"

#include <unordered_map>
#include <vector>

namespace tsa {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;
};

// Decoupled-weight-decay Adam. Moments are keyed by parameter name and start
// at zero; a NaN gradient aborts the whole step before any mutation.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& params, double lr_override = -1.0);
    long step_count() const { return step_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    AdamWConfig cfg_;
    std::unordered_map<std::string, Moments> state_;
    long step_ = 0;
};

// Cosine annealing from lr down to lr/100 over total_epochs.
double cosine_lr(double base_lr, int epoch, int total_epochs);

} // namespace tsa

#endif // TSAGENT_OPTIMIZER_HPP
