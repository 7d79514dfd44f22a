#pragma once
#include <cmath>

#include "pointdc/tensor.hpp"

namespace pointdc {

// Per entry: v <- momentum*v + g; w <- w - lr*v.
inline void sgd_step(ParamSet& params, double lr, double momentum) {
    if (lr <= 0.0) throw UsageError("sgd_step requires lr > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw UsageError("sgd_step momentum must be in [0,1)");
    for (auto& e : params.entries()) {
        auto& v = e.momentum.values();
        const auto& g = e.grad.values();
        auto& w = e.value.values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = momentum * v[i] + g[i];
            w[i] -= lr * v[i];
        }
    }
}

// Cosine decay from base_lr at epoch 0 to 0 at total_epochs.
inline double cosine_lr(double base_lr, int epoch, int total_epochs) {
    if (total_epochs <= 0) return base_lr;
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return base_lr * 0.5 * (1.0 + std::cos(M_PI * std::min(t, 1.0)));
}

}  // namespace pointdc
