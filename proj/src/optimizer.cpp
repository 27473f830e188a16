#include "tsagent/optimizer.hpp"

#include "tsagent/errors.hpp"

#include <cmath>

namespace tsa {

void AdamW::step(ParamStore& params, double lr_override) {
    double lr = lr_override > 0.0 ? lr_override : cfg_.lr;

    // Validate every gradient before touching any parameter.
    for (auto& p : params.all_mut()) {
        for (double g : p.grad()) {
            if (!std::isfinite(g))
                throw NumericError("AdamW: non-finite gradient for parameter '" + p.name() + "', step aborted");
        }
    }

    ++step_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    double bc2 = 1.0 - std::pow(cfg_.beta2, step_);

    for (auto& p : params.all_mut()) {
        auto& mom = state_[p.name()];
        std::size_t n = static_cast<std::size_t>(p.size());
        if (mom.m.size() != n) {
            mom.m.assign(n, 0.0);
            mom.v.assign(n, 0.0);
        }
        std::vector<double> g = p.grad();
        auto& x = p.data_mut();
        for (std::size_t i = 0; i < n; ++i) {
            mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g[i];
            mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            double mhat = mom.m[i] / bc1;
            double vhat = mom.v[i] / bc2;
            x[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * x[i]);
        }
    }
}

double cosine_lr(double base_lr, int epoch, int total_epochs) {
    if (total_epochs <= 1) return base_lr;
    double floor = base_lr / 100.0;
    double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    return floor + 0.5 * (base_lr - floor) * (1.0 + std::cos(M_PI * t));
}

} // namespace tsa
