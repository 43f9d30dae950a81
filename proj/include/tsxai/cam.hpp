#pragma once

// Class activation mapping over the time axis.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tsxai/fcn.hpp"
#include "tsxai/layers.hpp"
#include "tsxai/tensor.hpp"

namespace tsxai {

struct RelevanceMap {
    std::size_t sample_id = 0;
    std::size_t class_id = 0;
    std::vector<double> raw;
    std::vector<double> clamped;  // max(0, raw)
    std::vector<double> scaled;   // min-max scaled clamped scores, in [0, 1]

    friend bool operator==(const RelevanceMap&, const RelevanceMap&) = default;
};

/// raw[t] = sum_k w[c, k] * z[k, t] for sample `n` of the last-block activations.
std::vector<double> cam_raw(const Tensor3& activations, std::size_t n, const DenseParams& head, std::size_t class_id);

std::vector<double> clamp_positive(std::span<const double> raw);

/// (x - min) / (max - min); a constant input maps to all zeros.
std::vector<double> minmax_scale(std::span<const double> values);

RelevanceMap relevance_map(const Tensor3& activations, std::size_t n, const DenseParams& head, std::size_t class_id,
                           std::size_t sample_id);

/// Relevance of every sample in `batch`. Each sample is explained for
/// `class_id` when given, otherwise for the model's predicted class.
std::vector<RelevanceMap> explain(const FcnParams& params, const Tensor3& batch,
                                  std::optional<std::size_t> class_id = std::nullopt, std::size_t first_sample_id = 0);

/// Same as explain() with one explicit class per sample.
std::vector<RelevanceMap> explain(const FcnParams& params, const Tensor3& batch, std::span<const int> classes,
                                  std::size_t first_sample_id = 0);

}  // namespace tsxai
