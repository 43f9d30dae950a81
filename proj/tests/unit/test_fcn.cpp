#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsxai/errors.hpp"
#include "tsxai/fcn.hpp"
#include "tsxai/synthdata.hpp"

using namespace tsxai;

namespace {

std::vector<int> random_labels(std::size_t n, std::size_t classes, std::mt19937_64& rng) {
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng() % classes);
    return labels;
}

LabeledDataset tiny_synthetic(std::size_t n_per_class, std::uint64_t seed, std::size_t length = 40) {
    SynthConfig cfg;
    cfg.length = length;
    cfg.margin = 2;
    cfg.seed = seed;
    return generate_dataset(n_per_class, cfg);
}

Architecture tiny_arch() {
    Architecture a;
    a.blocks = {BlockSpec{4, 7}, BlockSpec{6, 5}, BlockSpec{4, 3}};
    return a;
}

}  // namespace

TEST_CASE("presets") {
    const auto paper = Architecture::paper();
    CHECK(paper.blocks[0] == BlockSpec{128, 7});
    CHECK(paper.blocks[1] == BlockSpec{256, 5});
    CHECK(paper.blocks[2] == BlockSpec{128, 3});
    const auto desk = Architecture::desk();
    CHECK(desk.blocks[1] == BlockSpec{64, 5});
    CHECK(desk.features() == 32);
    Architecture even = desk;
    even.blocks[0].kernel = 4;
    CHECK_THROWS_AS(even.validate(), ValueError);
}

TEST_CASE("analytic gradients match central differences on small random networks") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const auto arch = fixture::small_arch(rng, 4);
        const auto params = fixture::randomized_params(arch, rng);
        const std::size_t n = 2 + rng() % 3, t = 3 + rng() % 8;
        const auto x = fixture::random_tensor(n, arch.input_channels, t, rng);
        const auto labels = random_labels(n, arch.num_classes, rng);
        const auto report = oracle::check_gradients(params, x, labels);
        INFO(arch.describe() << " worst " << report.worst);
        CHECK(report.checked == params.parameter_count());
        CHECK(report.max_relative_error < 1e-4);
    }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    std::mt19937_64 rng(22);
    const auto arch = fixture::small_arch(rng);
    auto params = fixture::randomized_params(arch, rng);
    const auto x = fixture::random_tensor(3, arch.input_channels, 9, rng);
    ForwardCache cache;
    fcn_forward(params, x, Mode::train, &cache);
    const auto grads = fcn_backward(params, cache, Matrix(3, arch.num_classes, 0.0));
    for (auto tensor : grads.tensors())
        for (double v : tensor) CHECK(v == 0.0);
}

TEST_CASE("backward without a cached forward is a state error") {
    const auto params = FcnParams::init(tiny_arch(), 1);
    ForwardCache empty;
    CHECK_THROWS_AS(fcn_backward(params, empty, Matrix(1, 2)), StateError);
}

TEST_CASE("eval forward matches the long-double oracle and softmax is normalized") {
    std::mt19937_64 rng(23);
    const auto arch = fixture::small_arch(rng);
    const auto params = fixture::randomized_params(arch, rng);
    const auto x = fixture::random_tensor(5, arch.input_channels, 13, rng);
    const auto out = fcn_forward(params, x);
    const auto want = oracle::fcn_logits(params, x);
    for (std::size_t n = 0; n < 5; ++n) {
        double s = 0;
        for (std::size_t c = 0; c < arch.num_classes; ++c) {
            CHECK(out.logits(n, c) == doctest::Approx(static_cast<double>(want[n][c])).epsilon(1e-11));
            s += out.probs(n, c);
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
    CHECK(out.activations.length() == 13);
    CHECK(out.activations.channels() == arch.features());
}

TEST_CASE("train-mode loss matches the long-double oracle") {
    std::mt19937_64 rng(24);
    const auto arch = fixture::small_arch(rng);
    auto params = fixture::randomized_params(arch, rng);
    const auto x = fixture::random_tensor(4, arch.input_channels, 11, rng);
    const auto labels = random_labels(4, arch.num_classes, rng);
    const double want = static_cast<double>(oracle::fcn_loss(params, x, labels, true));
    const auto got = fcn_loss_and_grads(params, x, labels, Mode::train);
    CHECK(got.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("same padding keeps the time length through the network") {
    std::mt19937_64 rng(25);
    const auto params = FcnParams::init(tiny_arch(), 2);
    for (std::size_t t = 1; t <= 64; ++t) {
        const auto x = fixture::random_tensor(1, 1, t, rng);
        CHECK(fcn_forward(params, x).activations.length() == t);
    }
}

TEST_CASE("initialization is seeded and He-uniform bounded") {
    const auto a = FcnParams::init(Architecture::desk(), 5);
    const auto b = FcnParams::init(Architecture::desk(), 5);
    const auto c = FcnParams::init(Architecture::desk(), 6);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    const double limit = std::sqrt(6.0 / (32.0 * 5.0));
    for (double w : a.blocks[1].conv.weights) CHECK(std::abs(w) <= limit);
    for (double v : a.blocks[1].conv.bias) CHECK(v == 0.0);
    CHECK(a.parameter_count() == (32 * 7 + 32 + 64) + (64 * 32 * 5 + 64 + 128) + (32 * 64 * 3 + 32 + 64) + (2 * 32 + 2));
}

TEST_CASE("training is seeded, deterministic and learns the synthetic task") {
    const auto data = tiny_synthetic(40, 3);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.seed = 9;
    const auto first = fcn_train(data, tiny_arch(), cfg);
    const auto second = fcn_train(data, tiny_arch(), cfg);
    CHECK(first.log == second.log);
    CHECK(first.params == second.params);
    CHECK(first.log.epochs.size() == 12);
    CHECK(first.log.epochs.back().loss < first.log.epochs.front().loss);

    cfg.seed = 10;
    const auto other = fcn_train(data, tiny_arch(), cfg);
    CHECK_FALSE(other.params == first.params);
}

TEST_CASE("divergence reports epoch and batch") {
    auto data = tiny_synthetic(8, 4);
    data.series(5, 0, 3) = std::numeric_limits<double>::infinity();
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.shuffle = false;
    try {
        fcn_train(data, tiny_arch(), cfg);
        FAIL("expected a TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch() == 1);
        CHECK(e.batch() == 2);
    }
}

TEST_CASE("training config validation") {
    const auto data = tiny_synthetic(2, 1);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(fcn_train(data, tiny_arch(), cfg), ValueError);
    cfg.epochs = 1;
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(fcn_train(data, tiny_arch(), cfg), ValueError);
}

TEST_CASE("predict agrees with the eval forward and chunking") {
    std::mt19937_64 rng(26);
    const auto params = fixture::randomized_params(tiny_arch(), rng);
    const auto x = fixture::random_tensor(150, 1, 20, rng);
    const auto pred = predict(params, x);
    const auto direct = fcn_forward(params, x);
    for (std::size_t n = 0; n < 150; ++n) {
        CHECK(pred.labels[n] == static_cast<int>(argmax(direct.probs.row(n))));
        for (std::size_t c = 0; c < 2; ++c) CHECK(pred.probs(n, c) == doctest::Approx(direct.probs(n, c)).epsilon(1e-12));
    }
    const auto chunked = fcn_forward_chunked(params, x, 64);
    const auto single_chunks = fcn_forward_chunked(params, x, 64);
    CHECK(chunked.logits == single_chunks.logits);
}

TEST_CASE("predict breaks probability ties toward the lower class") {
    auto params = FcnParams::init(tiny_arch(), 3);
    std::fill(params.head.weights.begin(), params.head.weights.end(), 0.0);
    Tensor3 x(2, 1, 10, 1.0);
    const auto pred = predict(params, x);
    CHECK(pred.probs(0, 0) == 0.5);
    CHECK(pred.labels == std::vector<int>{0, 0});
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    fixture::TempDir dir("ckpt");
    std::mt19937_64 rng(27);
    const auto params = fixture::randomized_params(fixture::small_arch(rng), rng);
    save_checkpoint(params, dir / "model.bin");
    const auto loaded = load_checkpoint(dir / "model.bin");
    CHECK(loaded == params);
    const auto x = fixture::random_tensor(3, params.arch.input_channels, 12, rng);
    CHECK(fcn_forward(loaded, x).logits == fcn_forward(params, x).logits);

    {
        std::ofstream bad(dir / "bad.bin", std::ios::binary);
        bad << "not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.bin"), ParseError);
    CHECK_THROWS(load_checkpoint(dir / "missing.bin"));
}
