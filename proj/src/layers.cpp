#include "tsxai/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "tsxai/errors.hpp"

namespace tsxai {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

std::string dim(std::size_t v) { return std::to_string(v); }

// Unfolds the zero-padded input into a [in_channels * kernel, batch * length]
// matrix so the convolution becomes one GEMM.
RowMatrix im2col(const Tensor3& input, std::size_t kernel) {
    const std::size_t n_batch = input.batch();
    const std::size_t channels = input.channels();
    const std::size_t length = input.length();
    const auto pad = static_cast<std::ptrdiff_t>((kernel - 1) / 2);
    RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(channels * kernel),
                                     static_cast<Eigen::Index>(n_batch * length));
    for (std::size_t i = 0; i < channels; ++i) {
        for (std::size_t j = 0; j < kernel; ++j) {
            double* row = cols.data() + (i * kernel + j) * n_batch * length;
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
            const auto len = static_cast<std::ptrdiff_t>(length);
            const std::ptrdiff_t t_begin = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t t_end = std::min<std::ptrdiff_t>(len, len - shift);
            for (std::size_t n = 0; n < n_batch; ++n) {
                const double* src = input.series(n, i).data();
                double* dst = row + n * length;
                for (std::ptrdiff_t t = t_begin; t < t_end; ++t) dst[t] = src[t + shift];
            }
        }
    }
    return cols;
}

void check_channels(const char* op, std::size_t got, std::size_t expected) {
    if (got != expected) {
        throw ShapeError(std::string(op) + ": input has " + dim(got) + " channels, parameters expect " +
                         dim(expected));
    }
}

void check_same_shape(const char* op, const Tensor3& a, const Tensor3& b) {
    if (a.batch() != b.batch() || a.channels() != b.channels() || a.length() != b.length()) {
        throw ShapeError(std::string(op) + ": shape " + a.shape_string() + " does not match " + b.shape_string());
    }
}

}  // namespace

ConvLayerParams ConvLayerParams::zeros(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_size) {
    ConvLayerParams p;
    p.out_channels = out_channels;
    p.in_channels = in_channels;
    p.kernel_size = kernel_size;
    p.weights.assign(out_channels * in_channels * kernel_size, 0.0);
    p.bias.assign(out_channels, 0.0);
    return p;
}

void ConvLayerParams::validate() const {
    if (kernel_size == 0 || kernel_size % 2 == 0) {
        throw ShapeError("conv kernel_size must be odd, got " + dim(kernel_size));
    }
    if (weights.size() != out_channels * in_channels * kernel_size) {
        throw ShapeError("conv weights hold " + dim(weights.size()) + " values, expected [" + dim(out_channels) +
                         ", " + dim(in_channels) + ", " + dim(kernel_size) + "]");
    }
    if (bias.size() != out_channels) {
        throw ShapeError("conv bias holds " + dim(bias.size()) + " values, expected " + dim(out_channels));
    }
}

Tensor3 conv1d_same(const Tensor3& input, const ConvLayerParams& params) {
    params.validate();
    check_channels("conv1d_same", input.channels(), params.in_channels);
    const std::size_t n_batch = input.batch();
    const std::size_t length = input.length();
    const std::size_t out_ch = params.out_channels;

    const RowMatrix cols = im2col(input, params.kernel_size);
    ConstRowMap w(params.weights.data(), static_cast<Eigen::Index>(out_ch),
                  static_cast<Eigen::Index>(params.in_channels * params.kernel_size));
    const RowMatrix y = w * cols;

    Tensor3 out(n_batch, out_ch, length);
    for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            const double* src = y.data() + o * n_batch * length + n * length;
            double* dst = out.series(n, o).data();
            const double b = params.bias[o];
            for (std::size_t t = 0; t < length; ++t) dst[t] = src[t] + b;
        }
    }
    return out;
}

Tensor3 conv1d_same_backward(const Tensor3& input, const ConvLayerParams& params, const Tensor3& grad_output,
                             ConvLayerParams& grads) {
    params.validate();
    check_channels("conv1d_same_backward", input.channels(), params.in_channels);
    const std::size_t n_batch = input.batch();
    const std::size_t length = input.length();
    const std::size_t out_ch = params.out_channels;
    const std::size_t kernel = params.kernel_size;
    if (grad_output.batch() != n_batch || grad_output.channels() != out_ch || grad_output.length() != length) {
        throw ShapeError("conv1d_same_backward: grad_output " + grad_output.shape_string() + ", expected (" +
                         dim(n_batch) + ", " + dim(out_ch) + ", " + dim(length) + ")");
    }

    RowMatrix dy(static_cast<Eigen::Index>(out_ch), static_cast<Eigen::Index>(n_batch * length));
    for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            const auto src = grad_output.series(n, o);
            std::copy(src.begin(), src.end(), dy.data() + o * n_batch * length + n * length);
        }
    }

    const RowMatrix cols = im2col(input, kernel);
    grads = ConvLayerParams::zeros(out_ch, params.in_channels, kernel);
    RowMap dw(grads.weights.data(), static_cast<Eigen::Index>(out_ch),
              static_cast<Eigen::Index>(params.in_channels * kernel));
    dw.noalias() = dy * cols.transpose();
    for (std::size_t o = 0; o < out_ch; ++o) grads.bias[o] = dy.row(static_cast<Eigen::Index>(o)).sum();

    ConstRowMap w(params.weights.data(), static_cast<Eigen::Index>(out_ch),
                  static_cast<Eigen::Index>(params.in_channels * kernel));
    const RowMatrix dcols = w.transpose() * dy;

    Tensor3 grad_input(n_batch, params.in_channels, length);
    const auto pad = static_cast<std::ptrdiff_t>((kernel - 1) / 2);
    const auto len = static_cast<std::ptrdiff_t>(length);
    for (std::size_t i = 0; i < params.in_channels; ++i) {
        for (std::size_t j = 0; j < kernel; ++j) {
            const double* row = dcols.data() + (i * kernel + j) * n_batch * length;
            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
            const std::ptrdiff_t t_begin = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t t_end = std::min<std::ptrdiff_t>(len, len - shift);
            for (std::size_t n = 0; n < n_batch; ++n) {
                double* dst = grad_input.series(n, i).data();
                const double* src = row + n * length;
                for (std::ptrdiff_t t = t_begin; t < t_end; ++t) dst[t + shift] += src[t];
            }
        }
    }
    return grad_input;
}

BatchNormParams BatchNormParams::identity(std::size_t channels) {
    BatchNormParams p;
    p.gamma.assign(channels, 1.0);
    p.beta.assign(channels, 0.0);
    p.running_mean.assign(channels, 0.0);
    p.running_var.assign(channels, 1.0);
    return p;
}

void BatchNormParams::validate() const {
    const std::size_t c = gamma.size();
    if (beta.size() != c || running_mean.size() != c || running_var.size() != c) {
        throw ShapeError("batchnorm parameter vectors disagree in length");
    }
    if (!(eps > 0.0)) throw ValueError("batchnorm eps must be positive");
    for (double v : running_var) {
        if (v < 0.0) throw ValueError("batchnorm running_var must be non-negative");
    }
}

Tensor3 batchnorm_forward(const Tensor3& input, BatchNormParams& params, Mode mode, BatchNormCache* cache) {
    if (mode == Mode::eval) {
        Tensor3 out = batchnorm_forward(input, static_cast<const BatchNormParams&>(params));
        if (cache) {
            cache->mode = Mode::eval;
            cache->inv_std.resize(params.channels());
            for (std::size_t c = 0; c < params.channels(); ++c) {
                cache->inv_std[c] = 1.0 / std::sqrt(params.running_var[c] + params.eps);
            }
            cache->normalized = Tensor3();
        }
        return out;
    }

    params.validate();
    check_channels("batchnorm_forward", input.channels(), params.channels());
    const std::size_t n_batch = input.batch();
    const std::size_t channels = input.channels();
    const std::size_t length = input.length();
    const double count = static_cast<double>(n_batch * length);

    Tensor3 normalized(n_batch, channels, length);
    Tensor3 out(n_batch, channels, length);
    std::vector<double> inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        double sum = 0.0;
        for (std::size_t n = 0; n < n_batch; ++n) {
            for (double v : input.series(n, c)) sum += v;
        }
        const double mean = sum / count;
        double sq = 0.0;
        for (std::size_t n = 0; n < n_batch; ++n) {
            for (double v : input.series(n, c)) sq += (v - mean) * (v - mean);
        }
        const double var = sq / count;
        inv_std[c] = 1.0 / std::sqrt(var + params.eps);
        for (std::size_t n = 0; n < n_batch; ++n) {
            const auto src = input.series(n, c);
            auto xhat = normalized.series(n, c);
            auto dst = out.series(n, c);
            for (std::size_t t = 0; t < length; ++t) {
                xhat[t] = (src[t] - mean) * inv_std[c];
                dst[t] = params.gamma[c] * xhat[t] + params.beta[c];
            }
        }
        const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
        params.running_mean[c] = (1.0 - params.momentum) * params.running_mean[c] + params.momentum * mean;
        params.running_var[c] = (1.0 - params.momentum) * params.running_var[c] + params.momentum * unbiased;
    }
    if (cache) {
        cache->mode = Mode::train;
        cache->normalized = std::move(normalized);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

Tensor3 batchnorm_forward(const Tensor3& input, const BatchNormParams& params) {
    params.validate();
    check_channels("batchnorm_forward", input.channels(), params.channels());
    Tensor3 out(input.batch(), input.channels(), input.length());
    for (std::size_t c = 0; c < input.channels(); ++c) {
        const double inv_std = 1.0 / std::sqrt(params.running_var[c] + params.eps);
        const double scale = params.gamma[c] * inv_std;
        const double shift = params.beta[c] - params.running_mean[c] * scale;
        for (std::size_t n = 0; n < input.batch(); ++n) {
            const auto src = input.series(n, c);
            auto dst = out.series(n, c);
            for (std::size_t t = 0; t < src.size(); ++t) dst[t] = src[t] * scale + shift;
        }
    }
    return out;
}

Tensor3 batchnorm_backward(const BatchNormParams& params, const BatchNormCache& cache, const Tensor3& grad_output,
                           BatchNormGrads& grads) {
    const std::size_t channels = params.channels();
    check_channels("batchnorm_backward", grad_output.channels(), channels);
    if (cache.inv_std.size() != channels) throw StateError("batchnorm_backward: no cached forward pass");
    const std::size_t n_batch = grad_output.batch();
    const std::size_t length = grad_output.length();
    grads.gamma.assign(channels, 0.0);
    grads.beta.assign(channels, 0.0);
    Tensor3 grad_input(n_batch, channels, length);

    if (cache.mode == Mode::eval) {
        // Eval-mode gamma gradient would need the input; only the input path is provided.
        for (std::size_t c = 0; c < channels; ++c) {
            const double scale = params.gamma[c] * cache.inv_std[c];
            for (std::size_t n = 0; n < n_batch; ++n) {
                const auto g = grad_output.series(n, c);
                auto dst = grad_input.series(n, c);
                for (std::size_t t = 0; t < length; ++t) {
                    dst[t] = g[t] * scale;
                    grads.beta[c] += g[t];
                }
            }
        }
        return grad_input;
    }

    check_same_shape("batchnorm_backward", cache.normalized, grad_output);
    const double count = static_cast<double>(n_batch * length);
    for (std::size_t c = 0; c < channels; ++c) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (std::size_t n = 0; n < n_batch; ++n) {
            const auto g = grad_output.series(n, c);
            const auto xhat = cache.normalized.series(n, c);
            for (std::size_t t = 0; t < length; ++t) {
                sum_g += g[t];
                sum_gx += g[t] * xhat[t];
            }
        }
        grads.gamma[c] = sum_gx;
        grads.beta[c] = sum_g;
        const double k = params.gamma[c] * cache.inv_std[c] / count;
        for (std::size_t n = 0; n < n_batch; ++n) {
            const auto g = grad_output.series(n, c);
            const auto xhat = cache.normalized.series(n, c);
            auto dst = grad_input.series(n, c);
            for (std::size_t t = 0; t < length; ++t) {
                dst[t] = k * (count * g[t] - sum_g - xhat[t] * sum_gx);
            }
        }
    }
    return grad_input;
}

Tensor3 relu(const Tensor3& input) {
    Tensor3 out = input;
    // written so that NaN passes through and surfaces as a non-finite loss
    for (double& v : out.data()) v = v < 0.0 ? 0.0 : v;
    return out;
}

Tensor3 relu_backward(const Tensor3& pre_activation, const Tensor3& grad_output) {
    check_same_shape("relu_backward", pre_activation, grad_output);
    Tensor3 out = grad_output;
    auto pre = pre_activation.data();
    auto g = out.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(pre[i] > 0.0)) g[i] = 0.0;
    }
    return out;
}

Matrix global_avg_pool(const Tensor3& input) {
    if (input.length() == 0) throw ShapeError("global_avg_pool: zero-length series");
    Matrix out(input.batch(), input.channels());
    const double inv_t = 1.0 / static_cast<double>(input.length());
    for (std::size_t n = 0; n < input.batch(); ++n) {
        for (std::size_t c = 0; c < input.channels(); ++c) {
            double sum = 0.0;
            for (double v : input.series(n, c)) sum += v;
            out(n, c) = sum * inv_t;
        }
    }
    return out;
}

Tensor3 global_avg_pool_backward(const Matrix& grad_output, std::size_t length) {
    Tensor3 out(grad_output.rows(), grad_output.cols(), length);
    const double inv_t = 1.0 / static_cast<double>(length);
    for (std::size_t n = 0; n < grad_output.rows(); ++n) {
        for (std::size_t c = 0; c < grad_output.cols(); ++c) {
            auto dst = out.series(n, c);
            std::fill(dst.begin(), dst.end(), grad_output(n, c) * inv_t);
        }
    }
    return out;
}

DenseParams DenseParams::zeros(std::size_t num_classes, std::size_t features) {
    DenseParams p;
    p.num_classes = num_classes;
    p.features = features;
    p.weights.assign(num_classes * features, 0.0);
    p.bias.assign(num_classes, 0.0);
    return p;
}

void DenseParams::validate() const {
    if (weights.size() != num_classes * features || bias.size() != num_classes) {
        throw ShapeError("dense parameters do not match [" + dim(num_classes) + ", " + dim(features) + "]");
    }
}

Matrix dense_forward(const Matrix& pooled, const DenseParams& params) {
    params.validate();
    if (pooled.cols() != params.features) {
        throw ShapeError("dense_forward: pooled features " + dim(pooled.cols()) + ", parameters expect " +
                         dim(params.features));
    }
    Matrix logits(pooled.rows(), params.num_classes);
    for (std::size_t n = 0; n < pooled.rows(); ++n) {
        for (std::size_t c = 0; c < params.num_classes; ++c) {
            double acc = params.bias[c];
            for (std::size_t k = 0; k < params.features; ++k) acc += pooled(n, k) * params.weight(c, k);
            logits(n, c) = acc;
        }
    }
    return logits;
}

Matrix softmax(const Matrix& logits) {
    Matrix probs(logits.rows(), logits.cols());
    for (std::size_t n = 0; n < logits.rows(); ++n) {
        const auto row = logits.row(n);
        const double top = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            probs(n, c) = std::exp(row[c] - top);
            total += probs(n, c);
        }
        for (std::size_t c = 0; c < row.size(); ++c) probs(n, c) /= total;
    }
    return probs;
}

namespace {

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t num_classes) {
    if (labels.size() != rows) {
        throw ShapeError("got " + dim(labels.size()) + " labels for " + dim(rows) + " samples");
    }
    for (std::size_t n = 0; n < labels.size(); ++n) {
        if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= num_classes) {
            throw ValueError("label " + std::to_string(labels[n]) + " of sample " + dim(n) +
                             " outside class range [0, " + dim(num_classes) + ")");
        }
    }
}

}  // namespace

SoftmaxXent dense_softmax_xent(const Matrix& pooled, const DenseParams& params, std::span<const int> labels) {
    SoftmaxXent out;
    out.logits = dense_forward(pooled, params);
    check_labels(labels, pooled.rows(), params.num_classes);
    out.probs = softmax(out.logits);
    double total = 0.0;
    for (std::size_t n = 0; n < pooled.rows(); ++n) {
        // log-softmax directly from the logits keeps tiny probabilities finite
        const auto row = out.logits.row(n);
        const double top = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - top);
        total += (top + std::log(z)) - row[static_cast<std::size_t>(labels[n])];
    }
    out.loss = pooled.rows() ? total / static_cast<double>(pooled.rows()) : 0.0;
    return out;
}

Matrix softmax_xent_backward(const Matrix& probs, std::span<const int> labels) {
    check_labels(labels, probs.rows(), probs.cols());
    Matrix grad = probs;
    const double inv_n = 1.0 / static_cast<double>(probs.rows());
    for (std::size_t n = 0; n < probs.rows(); ++n) {
        grad(n, static_cast<std::size_t>(labels[n])) -= 1.0;
        for (double& v : grad.row(n)) v *= inv_n;
    }
    return grad;
}

Matrix dense_backward(const Matrix& pooled, const DenseParams& params, const Matrix& grad_logits, DenseParams& grads) {
    params.validate();
    if (grad_logits.rows() != pooled.rows() || grad_logits.cols() != params.num_classes) {
        throw ShapeError("dense_backward: grad_logits shape mismatch");
    }
    grads = DenseParams::zeros(params.num_classes, params.features);
    Matrix grad_pooled(pooled.rows(), params.features);
    for (std::size_t n = 0; n < pooled.rows(); ++n) {
        for (std::size_t c = 0; c < params.num_classes; ++c) {
            const double g = grad_logits(n, c);
            grads.bias[c] += g;
            for (std::size_t k = 0; k < params.features; ++k) {
                grads.weight(c, k) += g * pooled(n, k);
                grad_pooled(n, k) += g * params.weight(c, k);
            }
        }
    }
    return grad_pooled;
}

}  // namespace tsxai
