#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tsxai/errors.hpp"
#include "tsxai/synthdata.hpp"

using namespace tsxai;

TEST_CASE("default benchmark shape and balance") {
    SynthConfig train_cfg;
    SynthConfig test_cfg;
    test_cfg.seed = 1;
    const auto train = generate_dataset(250, train_cfg);
    const auto test = generate_dataset(250, test_cfg);
    CHECK(train.size() == 500);
    CHECK(test.size() == 500);
    CHECK(train.length() == 250);
    CHECK(train.class_counts() == std::vector<std::size_t>{250, 250});
    CHECK(train.labels[0] == 0);
    CHECK(train.labels[1] == 1);
    CHECK_FALSE(train.series == test.series);
    train.validate();
}

TEST_CASE("relevant sets are the nine indices around each spike, inside the margins") {
    SynthConfig cfg;
    cfg.seed = 5;
    for (const auto& s : generate_samples(200, cfg)) {
        REQUIRE(s.relevant.size() == kRelevantCount);
        for (std::size_t j = 0; j < kRelevantCount; ++j) CHECK(s.relevant[j] == s.spike_start - 2 + j);
        CHECK(s.spike_start >= 2 + cfg.margin);
        CHECK(s.spike_start <= cfg.length - 7 - cfg.margin);
    }
}

TEST_CASE("noise-free generation puts the spike exactly on top of the sinusoid") {
    SynthConfig cfg;
    cfg.noise_variance = 0.0;
    cfg.seed = 6;
    for (const auto& s : generate_samples(30, cfg)) {
        for (std::size_t t = 0; t < cfg.length; ++t) {
            const double base = std::sin(2.0 * std::numbers::pi * 0.2 * static_cast<double>(t));
            const bool in_spike = t >= s.spike_start && t < s.spike_start + kSpikeWidth;
            const double expected = base + (in_spike ? (s.label == 0 ? 2.0 : -2.0) : 0.0);
            CHECK(s.series[t] == doctest::Approx(expected).epsilon(1e-15));
        }
    }
}

TEST_CASE("zero amplitude and zero noise make both classes identical sinusoids") {
    SynthConfig cfg;
    cfg.noise_variance = 0.0;
    cfg.amplitude = 0.0;
    const auto data = generate_dataset(3, cfg);
    for (std::size_t n = 1; n < data.size(); ++n) {
        for (std::size_t t = 0; t < data.length(); ++t) CHECK(data.series(n, 0, t) == data.series(0, 0, t));
    }
}

TEST_CASE("noise has the configured variance") {
    SynthConfig cfg;
    cfg.amplitude = 0.0;
    cfg.seed = 8;
    const auto samples = generate_samples(100, cfg);
    double sum = 0, sq = 0;
    std::size_t count = 0;
    for (const auto& s : samples)
        for (std::size_t t = 0; t < cfg.length; ++t) {
            const double e = s.series[t] - std::sin(2.0 * std::numbers::pi * 0.2 * static_cast<double>(t));
            sum += e;
            sq += e * e;
            ++count;
        }
    const double mean = sum / count;
    CHECK(std::abs(mean) < 0.01);
    CHECK(sq / count - mean * mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("generation is determined by the seed") {
    SynthConfig cfg;
    cfg.seed = 12;
    const auto a = generate_dataset(20, cfg);
    const auto b = generate_dataset(20, cfg);
    CHECK(a.series == b.series);
    CHECK(a.relevant_sets == b.relevant_sets);
    cfg.seed = 13;
    CHECK_FALSE(generate_dataset(20, cfg).series == a.series);
}

TEST_CASE("configurations that cannot hold the spike are rejected") {
    SynthConfig cfg;
    cfg.length = 29;
    CHECK_THROWS_AS(generate_dataset(1, cfg), ValueError);
    cfg.length = 30;
    CHECK_NOTHROW(generate_dataset(1, cfg));
    cfg.noise_variance = -1.0;
    CHECK_THROWS_AS(generate_dataset(1, cfg), ValueError);
    CHECK_THROWS_AS(generate_dataset(0, SynthConfig{}), ValueError);
}
