#pragma once

#include "mimic/nn.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace mimic {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float clip_norm = 10.0f;  // global-norm gradient clip, 0 disables
};

class Adam {
public:
    Adam() = default;
    Adam(const ParamList& params, AdamConfig cfg) : cfg_(cfg) {
        slots_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            slots_[i].m.assign(params[i].tensor.value().size(), 0.0f);
            slots_[i].v.assign(params[i].tensor.value().size(), 0.0f);
        }
    }

    int64_t step_count() const { return step_count_; }

    void zero_grad(const ParamList& params) {
        for (const auto& p : params) p.tensor.zero_grad();
    }

    // Standard bias-corrected Adam. Rejects the whole update if any gradient
    // is non-finite, naming the offending parameter.
    void step(const ParamList& params) {
        for (const auto& p : params) {
            for (float g : p.tensor.grad())
                if (!std::isfinite(g))
                    throw NumericError("adam: non-finite gradient in parameter '" + p.name + "'");
        }
        if (cfg_.clip_norm > 0.0f) {
            double sq = 0.0;
            for (const auto& p : params)
                for (float g : p.tensor.grad()) sq += static_cast<double>(g) * g;
            const double norm = std::sqrt(sq);
            if (norm > cfg_.clip_norm) {
                const float s = static_cast<float>(cfg_.clip_norm / norm);
                for (const auto& p : params)
                    for (float& g : p.tensor.grad()) g *= s;
            }
        }
        step_count_ += 1;
        const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(step_count_));
        const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(step_count_));
        for (size_t i = 0; i < params.size(); ++i) {
            auto& value = params[i].tensor.value();
            auto& grad = params[i].tensor.grad();
            auto& m = slots_[i].m;
            auto& v = slots_[i].v;
            for (size_t j = 0; j < value.size(); ++j) {
                m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * grad[j];
                v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * grad[j] * grad[j];
                const float mhat = static_cast<float>(m[j] / bc1);
                const float vhat = static_cast<float>(v[j] / bc2);
                value[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    void set_lr(float lr) { cfg_.lr = lr; }
    const AdamConfig& config() const { return cfg_; }

private:
    struct Slot {
        std::vector<float> m, v;
    };
    AdamConfig cfg_;
    std::vector<Slot> slots_;
    int64_t step_count_ = 0;
};

}  // namespace mimic
