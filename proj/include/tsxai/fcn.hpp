#pragma once

// Three conv -> batch-norm -> ReLU blocks, global average pooling, and a dense
// softmax head. Every conv is same-padded, so the last block's activations are
// aligned one-to-one with the input time steps.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tsxai/dataset.hpp"
#include "tsxai/layers.hpp"
#include "tsxai/tensor.hpp"

namespace tsxai {

struct BlockSpec {
    std::size_t filters = 0;
    std::size_t kernel = 0;
    friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct Architecture {
    std::size_t input_channels = 1;
    std::size_t num_classes = 2;
    std::array<BlockSpec, 3> blocks{};

    /// 128x7, 256x5, 128x3.
    static Architecture paper(std::size_t num_classes = 2, std::size_t input_channels = 1);
    /// 32x7, 64x5, 32x3; same shape at a quarter of the width.
    static Architecture desk(std::size_t num_classes = 2, std::size_t input_channels = 1);

    std::size_t features() const noexcept { return blocks[2].filters; }
    void validate() const;
    std::string describe() const;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ConvBlock {
    ConvLayerParams conv;
    BatchNormParams bn;
    friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

struct FcnParams {
    Architecture arch;
    std::array<ConvBlock, 3> blocks;
    DenseParams head;

    /// He-uniform weights (limit sqrt(6 / fan_in)), zero biases, identity batch norm.
    static FcnParams init(const Architecture& arch, std::uint64_t seed);

    /// Trainable tensors in a fixed order (running statistics excluded).
    std::vector<std::span<double>> learnable();
    std::size_t parameter_count() const;
    void validate() const;

    friend bool operator==(const FcnParams&, const FcnParams&) = default;
};

struct BlockGrads {
    ConvLayerParams conv;
    BatchNormGrads bn;
};

struct FcnGrads {
    std::array<BlockGrads, 3> blocks;
    DenseParams head;

    /// Same order as FcnParams::learnable().
    std::vector<std::span<const double>> tensors() const;
};

struct BlockCache {
    Tensor3 input;
    BatchNormCache bn;
    Tensor3 pre_activation;  // batch-norm output, fed to ReLU
};

/// Activations retained by a forward pass for the backward pass.
struct ForwardCache {
    std::array<BlockCache, 3> blocks;
    Tensor3 activations;
    Matrix pooled;
    bool valid = false;
};

struct FcnOutput {
    Matrix logits;
    Matrix probs;
    Tensor3 activations;  // last block output, [N, K, T]
};

/// Eval-mode forward pass (running batch-norm statistics, parameters untouched).
FcnOutput fcn_forward(const FcnParams& params, const Tensor3& batch);

/// Forward pass in either mode. Train mode updates the batch-norm running
/// statistics. When `cache` is given it is filled for fcn_backward.
FcnOutput fcn_forward(FcnParams& params, const Tensor3& batch, Mode mode, ForwardCache* cache = nullptr);

/// Gradients of a scalar loss given d(loss)/d(logits). Throws StateError when
/// the cache does not hold a forward pass.
FcnGrads fcn_backward(const FcnParams& params, const ForwardCache& cache, const Matrix& grad_logits);

struct LossAndGrads {
    double loss = 0.0;
    Matrix probs;
    FcnGrads grads;
};

/// Mean cross-entropy of `labels` and its gradients.
LossAndGrads fcn_loss_and_grads(FcnParams& params, const Tensor3& batch, std::span<const int> labels, Mode mode);

struct TrainConfig {
    std::size_t epochs = 150;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    bool shuffle = true;

    void validate() const;
};

struct EpochStats {
    double loss = 0.0;      // sample-weighted mean over the epoch's batches
    double accuracy = 0.0;  // train-mode predictions made during the epoch
    friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

struct TrainResult {
    FcnParams params;
    TrainLog log;
};

/// Called after each epoch with (epoch index, stats).
using EpochCallback = std::function<void(std::size_t, const EpochStats&)>;

/// Seeded training with Adam and per-epoch reshuffling. Throws TrainingError
/// naming the epoch and batch when the loss becomes non-finite.
TrainResult fcn_train(const LabeledDataset& data, const Architecture& arch, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

struct Prediction {
    std::vector<int> labels;
    Matrix probs;
};

/// Eval-mode argmax with ties toward the lower class index.
Prediction predict(const FcnParams& params, const Tensor3& batch);

/// Runs fcn_forward in chunks of `chunk` samples to bound memory.
FcnOutput fcn_forward_chunked(const FcnParams& params, const Tensor3& batch, std::size_t chunk = 64);

/// Binary checkpoint; save followed by load reproduces every double bit-exactly.
void save_checkpoint(const FcnParams& params, const std::filesystem::path& path);
FcnParams load_checkpoint(const std::filesystem::path& path);

}  // namespace tsxai
