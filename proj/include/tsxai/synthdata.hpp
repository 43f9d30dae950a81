#pragma once

// Two-class benchmark with known relevant time steps: a noisy sinusoid with a
// five-step block spike, upward for class 0 and downward for class 1. The
// spike plus two steps on either side form the nine relevant indices.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tsxai/dataset.hpp"

namespace tsxai {

inline constexpr std::size_t kSpikeWidth = 5;
inline constexpr std::size_t kRelevantPadding = 2;
inline constexpr std::size_t kRelevantCount = kSpikeWidth + 2 * kRelevantPadding;

struct SynthConfig {
    std::size_t length = 250;
    double frequency = 0.2;       // cycles per time step
    double noise_variance = 0.5;
    double amplitude = 2.0;
    std::size_t margin = 10;      // minimum distance of the relevant window from either end
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSample {
    std::vector<double> series;
    int label = 0;
    std::size_t spike_start = 0;
    std::vector<std::size_t> relevant;  // spike_start - 2 .. spike_start + 6
};

/// 2 * n_per_class samples with alternating labels 0, 1, 0, ...; fully determined by config.seed.
std::vector<SyntheticSample> generate_samples(std::size_t n_per_class, const SynthConfig& config);

LabeledDataset generate_dataset(std::size_t n_per_class, const SynthConfig& config);

}  // namespace tsxai
