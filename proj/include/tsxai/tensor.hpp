#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tsxai {

/// Dense row-major array of shape [batch, channels, time].
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t batch, std::size_t channels, std::size_t length, double fill = 0.0);
    Tensor3(std::size_t batch, std::size_t channels, std::size_t length, std::vector<double> data);

    std::size_t batch() const noexcept { return batch_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t length() const noexcept { return length_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t n, std::size_t c, std::size_t t) {
        return data_[(n * channels_ + c) * length_ + t];
    }
    double operator()(std::size_t n, std::size_t c, std::size_t t) const {
        return data_[(n * channels_ + c) * length_ + t];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    /// Time series of one (sample, channel) pair.
    std::span<double> series(std::size_t n, std::size_t c) {
        return {data_.data() + (n * channels_ + c) * length_, length_};
    }
    std::span<const double> series(std::size_t n, std::size_t c) const {
        return {data_.data() + (n * channels_ + c) * length_, length_};
    }

    /// All channels of one sample, contiguous [channels, time].
    std::span<const double> sample_data(std::size_t n) const {
        return {data_.data() + n * channels_ * length_, channels_ * length_};
    }

    /// Copies the listed samples into a new tensor, in order.
    Tensor3 gather(std::span<const std::size_t> samples) const;
    Tensor3 slice(std::size_t first, std::size_t count) const;

    bool all_finite() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t batch_ = 0;
    std::size_t channels_ = 0;
    std::size_t length_ = 0;
    std::vector<double> data_;
};

/// Dense row-major matrix, used for pooled features, logits and probabilities.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace tsxai
