#pragma once

#include "mandate/params.hpp"

namespace mandate {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a ParamStore. A non-finite gradient aborts the
// step before touching any parameter.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.lr <= 0.0) throw UsageError("Adam: learning rate must be positive");
    }

    std::size_t steps() const { return t_; }

    void step(ParamStore& store) {
        for (std::size_t i = 0; i < store.size(); ++i) {
            const Param& p = store.item(i);
            if (!p.grad.all_finite())
                throw NumericError("Adam: non-finite gradient for parameter '" + p.name +
                                   "'; step aborted");
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < store.size(); ++i) {
            Param& p = store.item(i);
            if (p.adam_m.numel() != p.value.numel()) {
                p.adam_m = Tensor(p.value.shape);
                p.adam_v = Tensor(p.value.shape);
            }
            for (std::size_t j = 0; j < p.value.numel(); ++j) {
                const double g = p.grad.data[j];
                double& m = p.adam_m.data[j];
                double& v = p.adam_v.data[j];
                m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
                v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                p.value.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
};

}  // namespace mandate
