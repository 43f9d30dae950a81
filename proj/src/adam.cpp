#include "tsxai/adam.hpp"

#include <cmath>
#include <string>

#include "tsxai/errors.hpp"

namespace tsxai {

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameter tensors but " +
                         std::to_string(grads.size()) + " gradients");
    }
    if (state.first_moment.empty() && state.step == 0) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.size(), 0.0);
            state.second_moment.emplace_back(p.size(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state tracks a different number of tensors");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || state.first_moment[i].size() != params[i].size() ||
            state.second_moment[i].size() != params[i].size()) {
            throw ShapeError("adam_step: tensor " + std::to_string(i) + " shape mismatch");
        }
    }

    ++state.step;
    const AdamConfig& cfg = state.config;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        const auto p = params[i];
        const auto g = grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            p[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

}  // namespace tsxai
