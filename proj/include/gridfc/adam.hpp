#pragma once

#include <cmath>

#include "gridfc/grnn.hpp"

namespace gridfc {

struct AdamConfig {
    double alpha = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second-moment accumulators shaped like the parameters they update.
class AdamState {
public:
    AdamState(const GrqnDims& dims, AdamConfig config)
        : m_(GrqnParams::zeros(dims)), v_(GrqnParams::zeros(dims)), config_(config) {}

    long step_count() const { return step_; }
    const AdamConfig& config() const { return config_; }

    /// One bias-corrected update of `params` from `grads`, in place.
    void update(GrqnParams& params, const GrqnParams& grads) {
        ++step_;
        const double mc = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
        const double vc = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
        auto pv = params.flat_views();
        const auto gv = grads.flat_views();
        auto mv = m_.flat_views();
        auto vv = v_.flat_views();
        for (size_t t = 0; t < pv.size(); ++t) {
            mv[t] = config_.beta1 * mv[t] + (1.0 - config_.beta1) * gv[t];
            vv[t] = config_.beta2 * vv[t].array().matrix() +
                    (1.0 - config_.beta2) * gv[t].cwiseProduct(gv[t]);
            pv[t].array() -= config_.alpha * (mv[t].array() / mc) /
                             ((vv[t].array() / vc).sqrt() + config_.eps);
        }
    }

private:
    GrqnParams m_, v_;
    AdamConfig config_;
    long step_ = 0;
};

}  // namespace gridfc
