#include "tsxai/synthdata.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tsxai/errors.hpp"

namespace tsxai {

void SynthConfig::validate() const {
    if (length <= kRelevantCount + 2 * margin) {
        throw ValueError("series length " + std::to_string(length) + " too short for a " +
                         std::to_string(kRelevantCount) + "-step relevant window with margin " +
                         std::to_string(margin) + " (need length > " + std::to_string(kRelevantCount + 2 * margin) +
                         ")");
    }
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
        throw ValueError("noise variance must be finite and non-negative");
    }
    if (!std::isfinite(frequency) || !std::isfinite(amplitude)) throw ValueError("non-finite synthetic parameter");
}

std::vector<SyntheticSample> generate_samples(std::size_t n_per_class, const SynthConfig& config) {
    config.validate();
    if (n_per_class < 1) throw ValueError("n_per_class must be at least 1");
    std::mt19937_64 rng(config.seed);
    const std::size_t lowest = kRelevantPadding + config.margin;
    const std::size_t highest = config.length - (kSpikeWidth + kRelevantPadding) - config.margin;
    std::uniform_int_distribution<std::size_t> placement(lowest, highest);
    std::normal_distribution<double> noise(0.0, std::sqrt(config.noise_variance));
    const bool noisy = config.noise_variance > 0.0;

    std::vector<SyntheticSample> samples(2 * n_per_class);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto& s = samples[i];
        s.label = static_cast<int>(i % 2);
        s.spike_start = placement(rng);
        s.series.resize(config.length);
        for (std::size_t t = 0; t < config.length; ++t) {
            s.series[t] = std::sin(2.0 * std::numbers::pi * config.frequency * static_cast<double>(t));
            if (noisy) s.series[t] += noise(rng);
        }
        const double offset = s.label == 0 ? config.amplitude : -config.amplitude;
        for (std::size_t t = s.spike_start; t < s.spike_start + kSpikeWidth; ++t) s.series[t] += offset;
        for (std::size_t t = s.spike_start - kRelevantPadding; t < s.spike_start + kSpikeWidth + kRelevantPadding;
             ++t) {
            s.relevant.push_back(t);
        }
    }
    return samples;
}

LabeledDataset generate_dataset(std::size_t n_per_class, const SynthConfig& config) {
    const auto samples = generate_samples(n_per_class, config);
    LabeledDataset data;
    data.name = "synthetic";
    data.label_values = {0.0, 1.0};
    std::vector<double> values;
    values.reserve(samples.size() * config.length);
    for (const auto& s : samples) {
        values.insert(values.end(), s.series.begin(), s.series.end());
        data.labels.push_back(s.label);
        data.relevant_sets.push_back(s.relevant);
    }
    data.series = Tensor3(samples.size(), 1, config.length, std::move(values));
    return data;
}

}  // namespace tsxai
