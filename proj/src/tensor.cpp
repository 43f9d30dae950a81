#include "tsxai/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "tsxai/errors.hpp"

namespace tsxai {

Tensor3::Tensor3(std::size_t batch, std::size_t channels, std::size_t length, double fill)
    : batch_(batch), channels_(channels), length_(length), data_(batch * channels * length, fill) {}

Tensor3::Tensor3(std::size_t batch, std::size_t channels, std::size_t length, std::vector<double> data)
    : batch_(batch), channels_(channels), length_(length), data_(std::move(data)) {
    if (data_.size() != batch * channels * length) {
        throw ShapeError("Tensor3: data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string());
    }
}

Tensor3 Tensor3::gather(std::span<const std::size_t> samples) const {
    Tensor3 out(samples.size(), channels_, length_);
    const std::size_t stride = channels_ * length_;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] >= batch_) {
            throw ShapeError("Tensor3::gather: sample " + std::to_string(samples[i]) + " out of range for batch " +
                             std::to_string(batch_));
        }
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(samples[i] * stride), stride,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return out;
}

Tensor3 Tensor3::slice(std::size_t first, std::size_t count) const {
    if (first + count > batch_) {
        throw ShapeError("Tensor3::slice: range [" + std::to_string(first) + ", " + std::to_string(first + count) +
                         ") exceeds batch " + std::to_string(batch_));
    }
    const std::size_t stride = channels_ * length_;
    std::vector<double> data(data_.begin() + static_cast<std::ptrdiff_t>(first * stride),
                             data_.begin() + static_cast<std::ptrdiff_t>((first + count) * stride));
    return Tensor3(count, channels_, length_, std::move(data));
}

bool Tensor3::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor3::shape_string() const {
    return "(" + std::to_string(batch_) + ", " + std::to_string(channels_) + ", " + std::to_string(length_) + ")";
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw ValueError("argmax of an empty range");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

}  // namespace tsxai
