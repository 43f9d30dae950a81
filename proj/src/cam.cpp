#include "tsxai/cam.hpp"

#include <algorithm>
#include <string>

#include "tsxai/errors.hpp"

namespace tsxai {

std::vector<double> cam_raw(const Tensor3& activations, std::size_t n, const DenseParams& head,
                            std::size_t class_id) {
    head.validate();
    if (class_id >= head.num_classes) {
        throw ValueError("class " + std::to_string(class_id) + " outside [0, " + std::to_string(head.num_classes) +
                         ")");
    }
    if (n >= activations.batch()) throw ShapeError("cam_raw: sample index out of range");
    if (activations.channels() != head.features) {
        throw ShapeError("cam_raw: activations have " + std::to_string(activations.channels()) +
                         " filters, head expects " + std::to_string(head.features));
    }
    std::vector<double> out(activations.length(), 0.0);
    for (std::size_t k = 0; k < head.features; ++k) {
        const double w = head.weight(class_id, k);
        const auto z = activations.series(n, k);
        for (std::size_t t = 0; t < out.size(); ++t) out[t] += w * z[t];
    }
    return out;
}

std::vector<double> clamp_positive(std::span<const double> raw) {
    std::vector<double> out(raw.begin(), raw.end());
    for (double& v : out) v = std::max(0.0, v);
    return out;
}

std::vector<double> minmax_scale(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t t = 0; t < values.size(); ++t) out[t] = (values[t] - *lo) / range;
    return out;
}

RelevanceMap relevance_map(const Tensor3& activations, std::size_t n, const DenseParams& head, std::size_t class_id,
                           std::size_t sample_id) {
    RelevanceMap map;
    map.sample_id = sample_id;
    map.class_id = class_id;
    map.raw = cam_raw(activations, n, head, class_id);
    map.clamped = clamp_positive(map.raw);
    map.scaled = minmax_scale(map.clamped);
    return map;
}

std::vector<RelevanceMap> explain(const FcnParams& params, const Tensor3& batch, std::optional<std::size_t> class_id,
                                  std::size_t first_sample_id) {
    const FcnOutput out = fcn_forward_chunked(params, batch);
    std::vector<RelevanceMap> maps;
    maps.reserve(batch.batch());
    for (std::size_t n = 0; n < batch.batch(); ++n) {
        const std::size_t c = class_id ? *class_id : argmax(out.probs.row(n));
        maps.push_back(relevance_map(out.activations, n, params.head, c, first_sample_id + n));
    }
    return maps;
}

std::vector<RelevanceMap> explain(const FcnParams& params, const Tensor3& batch, std::span<const int> classes,
                                  std::size_t first_sample_id) {
    if (classes.size() != batch.batch()) throw ShapeError("explain: one class per sample required");
    const FcnOutput out = fcn_forward_chunked(params, batch);
    std::vector<RelevanceMap> maps;
    maps.reserve(batch.batch());
    for (std::size_t n = 0; n < batch.batch(); ++n) {
        if (classes[n] < 0) throw ValueError("explain: negative class index");
        maps.push_back(relevance_map(out.activations, n, params.head, static_cast<std::size_t>(classes[n]),
                                     first_sample_id + n));
    }
    return maps;
}

}  // namespace tsxai
