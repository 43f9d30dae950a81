#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tsxai {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

/// One bias-corrected Adam update applied in place to every parameter tensor.
/// Moments are allocated on the first call; afterwards their shapes must keep
/// matching the parameters.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state);

}  // namespace tsxai
