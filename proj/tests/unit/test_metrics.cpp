#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsxai/errors.hpp"
#include "tsxai/metrics.hpp"

using namespace tsxai;

namespace {

std::vector<double> quantized_scores(std::size_t t, std::mt19937_64& rng) {
    // few distinct values, so ties are common
    std::vector<double> s(t);
    for (double& v : s) v = static_cast<double>(rng() % 4) / 4.0;
    return s;
}

TopKSet make_set(std::vector<std::size_t> idx) {
    const std::size_t k = idx.size();
    return {k, std::move(idx)};
}

}  // namespace

TEST_CASE("top_k ranks by score with ties toward the lower index") {
    const std::vector<double> s{0.2, 0.9, 0.5, 0.9, 0.1};
    CHECK(top_k(s, 3).indices == std::vector<std::size_t>{1, 3, 2});
    const std::vector<double> flat(6, 1.0);
    CHECK(top_k(flat, 2).indices == std::vector<std::size_t>{0, 1});
    CHECK_THROWS_AS(top_k(s, 0), ValueError);
    CHECK_THROWS_AS(top_k(s, 6), ValueError);

    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 300; ++trial) {
        const auto scores = quantized_scores(1 + rng() % 12, rng);
        const std::size_t k = 1 + rng() % scores.size();
        CHECK(top_k(scores, k).indices == oracle::top_k(scores, k));
    }
}

TEST_CASE("relevance accuracy") {
    const std::vector<std::size_t> y{3, 4, 5};
    CHECK(relevance_accuracy(make_set({3, 4, 5}), y) == 1.0);
    CHECK(relevance_accuracy(make_set({0, 4, 9}), y) == 1.0 / 3.0);
    CHECK(relevance_accuracy(make_set({0, 1}), y) == 0.0);
    CHECK_THROWS_AS(relevance_accuracy(make_set({0}), std::vector<std::size_t>{}), ValueError);

    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const auto scores = fixture::random_vector(12, rng);
        std::vector<std::size_t> rel{rng() % 12, 5, 11};
        std::sort(rel.begin(), rel.end());
        rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
        double previous = 0.0;
        for (std::size_t k = 1; k <= 12; ++k) {
            const double acc = relevance_accuracy(top_k(scores, k), rel);
            CHECK(acc >= previous);
            CHECK(acc <= 1.0);
            previous = acc;
        }
        CHECK(previous == 1.0);
    }
}

TEST_CASE("relevance consistency") {
    const std::vector<TopKSet> example{make_set({1, 2}), make_set({2, 3}), make_set({1, 2})};
    CHECK(relevance_consistency(example) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    const std::vector<TopKSet> same(4, make_set({0, 5, 7}));
    CHECK(relevance_consistency(same) == 1.0);
    CHECK(relevance_consistency(same, ConsistencyForm::full_double_sum) == 4.0);
    const std::vector<TopKSet> disjoint{make_set({0, 1}), make_set({2, 3})};
    CHECK(relevance_consistency(disjoint) == 0.0);
    const std::vector<TopKSet> one{make_set({0})};
    CHECK_THROWS_AS(relevance_consistency(one), ValueError);
    const std::vector<TopKSet> mixed_k{make_set({0}), make_set({0, 1})};
    CHECK_THROWS_AS(relevance_consistency(mixed_k), ValueError);

    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 2 + rng() % 3, k = 1 + rng() % 6;
        std::vector<TopKSet> sets;
        std::vector<std::vector<std::size_t>> raw;
        for (std::size_t i = 0; i < m; ++i) {
            sets.push_back(top_k(quantized_scores(8, rng), k));
            raw.push_back(sets.back().indices);
        }
        const double c = relevance_consistency(sets);
        CHECK(c == oracle::relevance_consistency(raw, k));
        std::shuffle(sets.begin(), sets.end(), rng);
        CHECK(relevance_consistency(sets) == c);
    }
}

TEST_CASE("relevance ratio") {
    const std::vector<std::vector<std::size_t>> rel{{2, 3}, {4, 5}};
    const std::vector<TopKSet> all{make_set({2, 3}), make_set({4, 5})};
    const auto full = relevance_ratio(rel, all, 10);
    CHECK(full.ratio == std::vector<double>{1.0, 1.0});
    CHECK(full.baseline == 0.2);
    const std::vector<TopKSet> none{make_set({0, 1}), make_set({0, 1})};
    CHECK(relevance_ratio(rel, none, 10).ratio == std::vector<double>{0.0, 0.0});
    const std::vector<TopKSet> half{make_set({2, 9}), make_set({0, 1})};
    CHECK(relevance_ratio(rel, half, 10).ratio == std::vector<double>{0.5, 0.0});
    CHECK_THROWS_AS(relevance_ratio(rel, std::vector<TopKSet>{make_set({1, 2})}, 10), ShapeError);

    std::mt19937_64 rng(54);
    const std::size_t t = 12;
    std::vector<std::vector<std::size_t>> sets;
    std::vector<TopKSet> tops_full;
    for (int i = 0; i < 20; ++i) {
        const std::size_t start = rng() % (t - 3);
        sets.push_back({start, start + 1, start + 2});
        tops_full.push_back(top_k(fixture::random_vector(t, rng), t));
    }
    for (double r : relevance_ratio(sets, tops_full, t).ratio) CHECK(r == 1.0);
}

TEST_CASE("classification metrics") {
    const auto half = classification_metrics({25, 25, 25, 25});
    CHECK(half.precision == 0.5);
    CHECK(half.recall == 0.5);
    CHECK(half.npv == 0.5);
    CHECK(half.specificity == 0.5);
    CHECK(half.warnings.empty());

    const auto perfect = classification_metrics({40, 0, 60, 0});
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.npv == 1.0);

    const auto m = classification_metrics({9, 1, 80, 10});
    CHECK(m.precision == doctest::Approx(0.9));
    CHECK(m.recall == doctest::Approx(9.0 / 19.0));
    CHECK(m.recall == doctest::Approx(0.4737).epsilon(1e-4));
    CHECK(m.npv == doctest::Approx(0.8889).epsilon(1e-4));
    CHECK(m.specificity == doctest::Approx(0.9877).epsilon(1e-4));

    const auto never_positive = classification_metrics({0, 0, 50, 50});
    CHECK(std::isnan(never_positive.precision));
    CHECK(never_positive.recall == 0.0);
    CHECK(never_positive.warnings.size() == 1);

    const std::vector<int> pred{1, 1, 0, 0, 1}, truth{1, 0, 0, 1, 1};
    const auto c = confusion_counts(pred, truth);
    CHECK(c.tp == 2);
    CHECK(c.fp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fn == 1);
    const auto flipped = confusion_counts(pred, truth, 0);
    CHECK(flipped.tp == 1);
    CHECK(flipped.fn == 1);
}

TEST_CASE("permutation test: identical groups, determinism and extreme separation") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0}, b{1.0, 2.0, 3.0, 4.0};
    CHECK(permutation_test(a, b, 2000, 1).p_value > 0.9);

    std::mt19937_64 rng(55);
    const auto x = fixture::random_vector(10, rng), y = fixture::random_vector(12, rng);
    const auto r1 = permutation_test(x, y, 3000, 77);
    const auto r2 = permutation_test(x, y, 3000, 77);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.n_extreme == r2.n_extreme);
    CHECK(r1.p_value == static_cast<double>(r1.n_extreme + 1) / 3001.0);

    const std::vector<double> zeros{0, 0, 0}, tens{10, 10, 10};
    const auto exact = exact_permutation_test(zeros, tens);
    CHECK(exact.n_permutations == 20);
    CHECK(exact.n_extreme == 2);  // the observed split and its mirror
    CHECK(exact.p_value == 0.1);
    CHECK(exact.observed == -10.0);
    const auto mc = permutation_test(zeros, tens, 20000, 3);
    CHECK(std::abs(mc.p_value - 0.1) < 0.01);

    CHECK_THROWS_AS(permutation_test(std::vector<double>{}, tens), ValueError);
}

TEST_CASE("exact permutation test matches the bitmask enumeration") {
    std::mt19937_64 rng(56);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t na = 1 + rng() % 5, nb = 1 + rng() % (8 - na);
        std::vector<double> a(na), b(nb);
        const bool integer = trial % 2 == 0;
        for (double& v : a) v = integer ? static_cast<double>(rng() % 4) : fixture::random_vector(1, rng)[0];
        for (double& v : b) v = integer ? static_cast<double>(rng() % 4) : fixture::random_vector(1, rng)[0];
        const auto got = exact_permutation_test(a, b);
        const auto want = oracle::exact_permutation(a, b);
        CHECK(got.n_permutations == want.total);
        CHECK(got.n_extreme == want.extreme);
        CHECK(got.p_value == want.p_value);
    }
}

TEST_CASE("permutation p-values are roughly uniform under the null") {
    std::mt19937_64 rng(57);
    std::normal_distribution<double> dist(0.0, 1.0);
    int rejections = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(10), b(10);
        for (double& v : a) v = dist(rng);
        for (double& v : b) v = dist(rng);
        if (permutation_test(a, b, 2000, static_cast<std::uint64_t>(trial)).p_value < 0.05) ++rejections;
    }
    const double fraction = rejections / 200.0;
    CHECK(fraction >= 0.01);
    CHECK(fraction <= 0.12);
}

TEST_CASE("summarize") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(summarize(std::vector<double>{7.0}).std == 0.0);
}
