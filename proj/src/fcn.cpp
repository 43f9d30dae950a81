#include "tsxai/fcn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "tsxai/adam.hpp"
#include "tsxai/errors.hpp"

namespace tsxai {

Architecture Architecture::paper(std::size_t num_classes, std::size_t input_channels) {
    return {input_channels, num_classes, {{{128, 7}, {256, 5}, {128, 3}}}};
}

Architecture Architecture::desk(std::size_t num_classes, std::size_t input_channels) {
    return {input_channels, num_classes, {{{32, 7}, {64, 5}, {32, 3}}}};
}

void Architecture::validate() const {
    if (input_channels == 0) throw ValueError("architecture needs at least one input channel");
    if (num_classes < 2) throw ValueError("architecture needs at least two classes");
    for (const auto& b : blocks) {
        if (b.filters == 0) throw ValueError("conv block with zero filters");
        if (b.kernel == 0 || b.kernel % 2 == 0) {
            throw ValueError("conv kernel sizes must be odd, got " + std::to_string(b.kernel));
        }
    }
}

std::string Architecture::describe() const {
    std::string s;
    for (const auto& b : blocks) s += std::to_string(b.filters) + "x" + std::to_string(b.kernel) + " ";
    return s + "-> GAP -> dense(" + std::to_string(num_classes) + ")";
}

FcnParams FcnParams::init(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    std::mt19937_64 rng(seed);
    FcnParams p;
    p.arch = arch;
    std::size_t in_ch = arch.input_channels;
    for (std::size_t b = 0; b < 3; ++b) {
        const auto& spec = arch.blocks[b];
        auto& block = p.blocks[b];
        block.conv = ConvLayerParams::zeros(spec.filters, in_ch, spec.kernel);
        const double limit = std::sqrt(6.0 / static_cast<double>(in_ch * spec.kernel));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : block.conv.weights) w = dist(rng);
        block.bn = BatchNormParams::identity(spec.filters);
        in_ch = spec.filters;
    }
    p.head = DenseParams::zeros(arch.num_classes, arch.features());
    const double limit = std::sqrt(6.0 / static_cast<double>(arch.features()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : p.head.weights) w = dist(rng);
    return p;
}

std::vector<std::span<double>> FcnParams::learnable() {
    std::vector<std::span<double>> out;
    for (auto& block : blocks) {
        out.emplace_back(block.conv.weights);
        out.emplace_back(block.conv.bias);
        out.emplace_back(block.bn.gamma);
        out.emplace_back(block.bn.beta);
    }
    out.emplace_back(head.weights);
    out.emplace_back(head.bias);
    return out;
}

std::size_t FcnParams::parameter_count() const {
    std::size_t n = head.weights.size() + head.bias.size();
    for (const auto& block : blocks) {
        n += block.conv.weights.size() + block.conv.bias.size() + block.bn.gamma.size() + block.bn.beta.size();
    }
    return n;
}

void FcnParams::validate() const {
    arch.validate();
    std::size_t in_ch = arch.input_channels;
    for (std::size_t b = 0; b < 3; ++b) {
        const auto& block = blocks[b];
        block.conv.validate();
        block.bn.validate();
        if (block.conv.in_channels != in_ch || block.conv.out_channels != arch.blocks[b].filters ||
            block.conv.kernel_size != arch.blocks[b].kernel || block.bn.channels() != arch.blocks[b].filters) {
            throw ShapeError("block " + std::to_string(b + 1) + " parameters do not match the architecture");
        }
        in_ch = block.conv.out_channels;
    }
    head.validate();
    if (head.features != arch.features() || head.num_classes != arch.num_classes) {
        throw ShapeError("head is [" + std::to_string(head.num_classes) + ", " + std::to_string(head.features) +
                         "], architecture expects [" + std::to_string(arch.num_classes) + ", " +
                         std::to_string(arch.features()) + "]");
    }
}

std::vector<std::span<const double>> FcnGrads::tensors() const {
    std::vector<std::span<const double>> out;
    for (const auto& block : blocks) {
        out.emplace_back(block.conv.weights);
        out.emplace_back(block.conv.bias);
        out.emplace_back(block.bn.gamma);
        out.emplace_back(block.bn.beta);
    }
    out.emplace_back(head.weights);
    out.emplace_back(head.bias);
    return out;
}

namespace {

void check_input(const FcnParams& params, const Tensor3& batch) {
    if (batch.length() == 0) throw ShapeError("fcn_forward: series length must be at least 1");
    if (batch.channels() != params.arch.input_channels) {
        throw ShapeError("fcn_forward: input has " + std::to_string(batch.channels()) +
                         " channels, architecture expects " + std::to_string(params.arch.input_channels));
    }
}

FcnOutput finish_forward(const DenseParams& head, Tensor3 activations, Matrix* pooled_out) {
    FcnOutput out;
    Matrix pooled = global_avg_pool(activations);
    out.logits = dense_forward(pooled, head);
    out.probs = softmax(out.logits);
    out.activations = std::move(activations);
    if (pooled_out) *pooled_out = std::move(pooled);
    return out;
}

}  // namespace

FcnOutput fcn_forward(const FcnParams& params, const Tensor3& batch) {
    check_input(params, batch);
    Tensor3 x = batch;
    for (const auto& block : params.blocks) {
        x = relu(batchnorm_forward(conv1d_same(x, block.conv), block.bn));
    }
    return finish_forward(params.head, std::move(x), nullptr);
}

FcnOutput fcn_forward(FcnParams& params, const Tensor3& batch, Mode mode, ForwardCache* cache) {
    if (mode == Mode::eval && !cache) return fcn_forward(static_cast<const FcnParams&>(params), batch);
    check_input(params, batch);
    if (cache) cache->valid = false;
    Tensor3 x = batch;
    for (std::size_t b = 0; b < 3; ++b) {
        auto& block = params.blocks[b];
        BatchNormCache* bn_cache = cache ? &cache->blocks[b].bn : nullptr;
        Tensor3 pre = batchnorm_forward(conv1d_same(x, block.conv), block.bn, mode, bn_cache);
        Tensor3 next = relu(pre);
        if (cache) {
            cache->blocks[b].input = std::move(x);
            cache->blocks[b].pre_activation = std::move(pre);
        }
        x = std::move(next);
    }
    Matrix pooled;
    FcnOutput out = finish_forward(params.head, std::move(x), cache ? &pooled : nullptr);
    if (cache) {
        cache->activations = out.activations;
        cache->pooled = std::move(pooled);
        cache->valid = true;
    }
    return out;
}

FcnGrads fcn_backward(const FcnParams& params, const ForwardCache& cache, const Matrix& grad_logits) {
    if (!cache.valid) throw StateError("fcn_backward called without a cached forward pass");
    FcnGrads grads;
    const Matrix grad_pooled = dense_backward(cache.pooled, params.head, grad_logits, grads.head);
    Tensor3 grad = global_avg_pool_backward(grad_pooled, cache.activations.length());
    for (std::size_t b = 3; b-- > 0;) {
        const auto& block = params.blocks[b];
        const auto& bc = cache.blocks[b];
        grad = relu_backward(bc.pre_activation, grad);
        grad = batchnorm_backward(block.bn, bc.bn, grad, grads.blocks[b].bn);
        grad = conv1d_same_backward(bc.input, block.conv, grad, grads.blocks[b].conv);
    }
    return grads;
}

LossAndGrads fcn_loss_and_grads(FcnParams& params, const Tensor3& batch, std::span<const int> labels, Mode mode) {
    ForwardCache cache;
    fcn_forward(params, batch, mode, &cache);
    const SoftmaxXent head = dense_softmax_xent(cache.pooled, params.head, labels);
    LossAndGrads out;
    out.loss = head.loss;
    out.grads = fcn_backward(params, cache, softmax_xent_backward(head.probs, labels));
    out.probs = head.probs;
    return out;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValueError("epochs must be at least 1");
    if (batch_size < 1) throw ValueError("batch size must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValueError("learning rate must be positive");
}

TrainResult fcn_train(const LabeledDataset& data, const Architecture& arch, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
    config.validate();
    data.validate();
    if (data.size() == 0) throw ValueError("cannot train on an empty dataset");
    if (data.num_classes() > arch.num_classes) {
        throw ValueError("dataset has " + std::to_string(data.num_classes()) + " classes, architecture " +
                         std::to_string(arch.num_classes));
    }

    TrainResult result;
    result.params = FcnParams::init(arch, config.seed);
    // Separate stream for batch order so that init and shuffling are independent.
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    AdamState adam(AdamConfig{config.learning_rate});

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t first = 0; first < order.size(); first += config.batch_size, ++batch_index) {
            const std::size_t count = std::min(config.batch_size, order.size() - first);
            const std::span<const std::size_t> rows(order.data() + first, count);
            const Tensor3 batch = data.series.gather(rows);
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) labels[i] = data.labels[rows[i]];

            LossAndGrads step = fcn_loss_and_grads(result.params, batch, labels, Mode::train);
            if (!std::isfinite(step.loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                        std::to_string(batch_index + 1),
                                    epoch + 1, batch_index + 1);
            }
            loss_sum += step.loss * static_cast<double>(count);
            for (std::size_t i = 0; i < count; ++i) {
                if (static_cast<int>(argmax(step.probs.row(i))) == labels[i]) ++correct;
            }
            const auto params = result.params.learnable();
            const auto grads = step.grads.tensors();
            adam_step(params, grads, adam);
        }
        EpochStats stats{loss_sum / static_cast<double>(data.size()),
                         static_cast<double>(correct) / static_cast<double>(data.size())};
        result.log.epochs.push_back(stats);
        if (on_epoch) on_epoch(epoch, stats);
    }
    return result;
}

FcnOutput fcn_forward_chunked(const FcnParams& params, const Tensor3& batch, std::size_t chunk) {
    if (chunk == 0) throw ValueError("chunk size must be positive");
    if (batch.batch() <= chunk) return fcn_forward(params, batch);
    FcnOutput out;
    out.logits = Matrix(batch.batch(), params.arch.num_classes);
    out.probs = Matrix(batch.batch(), params.arch.num_classes);
    out.activations = Tensor3(batch.batch(), params.arch.features(), batch.length());
    for (std::size_t first = 0; first < batch.batch(); first += chunk) {
        const std::size_t count = std::min(chunk, batch.batch() - first);
        const FcnOutput part = fcn_forward(params, batch.slice(first, count));
        std::copy(part.logits.data().begin(), part.logits.data().end(),
                  out.logits.data().begin() + static_cast<std::ptrdiff_t>(first * params.arch.num_classes));
        std::copy(part.probs.data().begin(), part.probs.data().end(),
                  out.probs.data().begin() + static_cast<std::ptrdiff_t>(first * params.arch.num_classes));
        std::copy(part.activations.data().begin(), part.activations.data().end(),
                  out.activations.data().begin() +
                      static_cast<std::ptrdiff_t>(first * params.arch.features() * batch.length()));
    }
    return out;
}

Prediction predict(const FcnParams& params, const Tensor3& batch) {
    FcnOutput out = fcn_forward_chunked(params, batch);
    Prediction pred;
    pred.labels.reserve(batch.batch());
    for (std::size_t n = 0; n < batch.batch(); ++n) pred.labels.push_back(static_cast<int>(argmax(out.probs.row(n))));
    pred.probs = std::move(out.probs);
    return pred;
}

// Checkpoint layout: 8-byte magic, u32 version, architecture as u64 fields,
// then every tensor as a u64 count followed by IEEE-754 doubles. All integers
// and doubles are little-endian.
namespace {

constexpr char kMagic[8] = {'T', 'S', 'X', 'A', 'I', 'F', 'C', 'N'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u64(std::uint64_t v) {
        char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(bytes, 8);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void vec(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    std::uint64_t u64() {
        unsigned char bytes[8];
        if (!in_.read(reinterpret_cast<char*>(bytes), 8)) throw ParseError("truncated checkpoint " + source_, 0);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<double> vec() {
        const std::uint64_t n = u64();
        if (n > (std::uint64_t{1} << 32)) throw ParseError("implausible tensor size in checkpoint " + source_, 0);
        std::vector<double> v(n);
        for (double& x : v) x = f64();
        return v;
    }

private:
    std::istream& in_;
    std::string source_;
};

}  // namespace

void save_checkpoint(const FcnParams& params, const std::filesystem::path& path) {
    params.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
    out.write(kMagic, sizeof(kMagic));
    Writer w(out);
    w.u64(kVersion);
    w.u64(params.arch.input_channels);
    w.u64(params.arch.num_classes);
    for (const auto& b : params.arch.blocks) {
        w.u64(b.filters);
        w.u64(b.kernel);
    }
    for (const auto& block : params.blocks) {
        w.vec(block.conv.weights);
        w.vec(block.conv.bias);
        w.vec(block.bn.gamma);
        w.vec(block.bn.beta);
        w.vec(block.bn.running_mean);
        w.vec(block.bn.running_var);
        w.f64(block.bn.momentum);
        w.f64(block.bn.eps);
    }
    w.vec(params.head.weights);
    w.vec(params.head.bias);
    if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

FcnParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint '" + path.string() + "'", 0);
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
        throw ParseError("'" + path.string() + "' is not an FCN checkpoint", 0);
    }
    Reader r(in, path.string());
    const std::uint64_t version = r.u64();
    if (version != kVersion) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
    }
    FcnParams p;
    p.arch.input_channels = r.u64();
    p.arch.num_classes = r.u64();
    for (auto& b : p.arch.blocks) {
        b.filters = r.u64();
        b.kernel = r.u64();
    }
    std::size_t in_ch = p.arch.input_channels;
    for (std::size_t b = 0; b < 3; ++b) {
        auto& block = p.blocks[b];
        block.conv.out_channels = p.arch.blocks[b].filters;
        block.conv.in_channels = in_ch;
        block.conv.kernel_size = p.arch.blocks[b].kernel;
        block.conv.weights = r.vec();
        block.conv.bias = r.vec();
        block.bn.gamma = r.vec();
        block.bn.beta = r.vec();
        block.bn.running_mean = r.vec();
        block.bn.running_var = r.vec();
        block.bn.momentum = r.f64();
        block.bn.eps = r.f64();
        in_ch = block.conv.out_channels;
    }
    p.head.num_classes = p.arch.num_classes;
    p.head.features = p.arch.features();
    p.head.weights = r.vec();
    p.head.bias = r.vec();
    try {
        p.validate();
    } catch (const Error& e) {
        throw ParseError("inconsistent checkpoint '" + path.string() + "': " + e.what(), 0);
    }
    return p;
}

}  // namespace tsxai
