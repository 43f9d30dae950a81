#pragma once

// Forward and reverse-mode passes for the layers of a 1D fully-convolutional
// classifier. All functions are single-threaded and deterministic.

#include <cstddef>
#include <span>
#include <vector>

#include "tsxai/tensor.hpp"

namespace tsxai {

enum class Mode { train, eval };

struct ConvLayerParams {
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::size_t kernel_size = 0;
    std::vector<double> weights;  // [out_channels, in_channels, kernel_size]
    std::vector<double> bias;     // [out_channels]

    static ConvLayerParams zeros(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_size);

    double& weight(std::size_t o, std::size_t i, std::size_t j) {
        return weights[(o * in_channels + i) * kernel_size + j];
    }
    double weight(std::size_t o, std::size_t i, std::size_t j) const {
        return weights[(o * in_channels + i) * kernel_size + j];
    }

    /// Throws ShapeError unless the buffers match the declared dims and the kernel is odd.
    void validate() const;

    friend bool operator==(const ConvLayerParams&, const ConvLayerParams&) = default;
};

/// Same-padded 1D convolution: (kernel_size - 1) / 2 zeros on each side, so the
/// output keeps the input's time length.
Tensor3 conv1d_same(const Tensor3& input, const ConvLayerParams& params);

/// Writes weight/bias gradients into `grads` (resized as needed) and returns
/// the gradient with respect to `input`.
Tensor3 conv1d_same_backward(const Tensor3& input, const ConvLayerParams& params, const Tensor3& grad_output,
                             ConvLayerParams& grads);

struct BatchNormParams {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    /// gamma = 1, beta = 0, running mean 0 and running variance 1.
    static BatchNormParams identity(std::size_t channels);

    std::size_t channels() const noexcept { return gamma.size(); }
    void validate() const;

    friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

struct BatchNormGrads {
    std::vector<double> gamma;
    std::vector<double> beta;
};

struct BatchNormCache {
    Mode mode = Mode::eval;
    Tensor3 normalized;
    std::vector<double> inv_std;
};

/// Per-channel normalization over the batch and time axes. Train mode uses the
/// batch statistics and updates the running estimates (the unbiased batch
/// variance feeds the running variance). Eval mode uses the running estimates.
Tensor3 batchnorm_forward(const Tensor3& input, BatchNormParams& params, Mode mode,
                          BatchNormCache* cache = nullptr);

/// Eval-mode forward that leaves the parameters untouched.
Tensor3 batchnorm_forward(const Tensor3& input, const BatchNormParams& params);

Tensor3 batchnorm_backward(const BatchNormParams& params, const BatchNormCache& cache, const Tensor3& grad_output,
                           BatchNormGrads& grads);

Tensor3 relu(const Tensor3& input);

/// Gradient through max(0, x); elements with x <= 0 pass no gradient.
Tensor3 relu_backward(const Tensor3& pre_activation, const Tensor3& grad_output);

/// [N, C, T] -> [N, C], mean over time.
Matrix global_avg_pool(const Tensor3& input);
Tensor3 global_avg_pool_backward(const Matrix& grad_output, std::size_t length);

struct DenseParams {
    std::size_t num_classes = 0;
    std::size_t features = 0;
    std::vector<double> weights;  // [num_classes, features]
    std::vector<double> bias;     // [num_classes]

    static DenseParams zeros(std::size_t num_classes, std::size_t features);

    double& weight(std::size_t c, std::size_t k) { return weights[c * features + k]; }
    double weight(std::size_t c, std::size_t k) const { return weights[c * features + k]; }

    void validate() const;

    friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

Matrix dense_forward(const Matrix& pooled, const DenseParams& params);

/// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

struct SoftmaxXent {
    Matrix logits;
    Matrix probs;
    double loss = 0.0;  // mean negative log-likelihood over rows
};

SoftmaxXent dense_softmax_xent(const Matrix& pooled, const DenseParams& params, std::span<const int> labels);

/// d(mean NLL)/d(logits) = (probs - onehot) / N.
Matrix softmax_xent_backward(const Matrix& probs, std::span<const int> labels);

/// Returns d/d(pooled) and writes weight/bias gradients into `grads`.
Matrix dense_backward(const Matrix& pooled, const DenseParams& params, const Matrix& grad_logits, DenseParams& grads);

}  // namespace tsxai
