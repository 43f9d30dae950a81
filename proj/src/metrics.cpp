#include "tsxai/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tsxai/errors.hpp"

namespace tsxai {

bool TopKSet::contains(std::size_t t) const {
    return std::find(indices.begin(), indices.end(), t) != indices.end();
}

TopKSet top_k(std::span<const double> scores, std::size_t k) {
    if (k < 1 || k > scores.size()) {
        throw ValueError("top_k: k = " + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    order.resize(k);
    return {k, std::move(order)};
}

double relevance_accuracy(const TopKSet& top, std::span<const std::size_t> relevant) {
    if (relevant.empty()) throw ValueError("relevance_accuracy: empty relevant set");
    std::size_t hits = 0;
    for (std::size_t y : relevant) {
        if (top.contains(y)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

namespace {

std::size_t overlap(const TopKSet& a, const TopKSet& b) {
    std::size_t n = 0;
    for (std::size_t t : a.indices) {
        if (b.contains(t)) ++n;
    }
    return n;
}

}  // namespace

double relevance_consistency(std::span<const TopKSet> sets, ConsistencyForm form) {
    const std::size_t models = sets.size();
    if (models < 2) throw ValueError("relevance_consistency needs at least two models");
    const std::size_t k = sets[0].k;
    for (const auto& s : sets) {
        if (s.k != k || s.indices.size() != k) throw ValueError("relevance_consistency: sets differ in k");
    }
    double total = 0.0;
    if (form == ConsistencyForm::distinct_pairs) {
        for (std::size_t m = 0; m < models; ++m) {
            for (std::size_t n = m + 1; n < models; ++n) total += static_cast<double>(overlap(sets[m], sets[n]));
        }
        const double pairs = static_cast<double>(models * (models - 1) / 2);
        return total / (pairs * static_cast<double>(k));
    }
    for (std::size_t m = 0; m < models; ++m) {
        for (std::size_t n = 0; n < models; ++n) total += static_cast<double>(overlap(sets[m], sets[n]));
    }
    return total / (static_cast<double>(models) * static_cast<double>(k));
}

RelevanceRatio relevance_ratio(std::span<const std::vector<std::size_t>> relevant_sets,
                               std::span<const TopKSet> tops, std::size_t length) {
    if (relevant_sets.empty()) throw ValueError("relevance_ratio: no samples");
    if (relevant_sets.size() != tops.size()) throw ShapeError("relevance_ratio: one top-k set per sample required");
    const std::size_t positions = relevant_sets[0].size();
    const std::size_t k = tops[0].k;
    RelevanceRatio out;
    out.k = k;
    out.length = length;
    out.ratio.assign(positions, 0.0);
    for (std::size_t i = 0; i < relevant_sets.size(); ++i) {
        if (relevant_sets[i].size() != positions) {
            throw ShapeError("relevance_ratio: samples have different numbers of relevant steps");
        }
        if (tops[i].k != k) throw ValueError("relevance_ratio: top-k sets differ in k");
        for (std::size_t j = 0; j < positions; ++j) {
            if (tops[i].contains(relevant_sets[i][j])) out.ratio[j] += 1.0;
        }
    }
    for (double& r : out.ratio) r /= static_cast<double>(relevant_sets.size());
    out.baseline = static_cast<double>(k) / static_cast<double>(length);
    return out;
}

ConfusionCounts confusion_counts(std::span<const int> predicted, std::span<const int> truth, int positive) {
    if (predicted.size() != truth.size()) throw ShapeError("confusion_counts: prediction and label counts differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool pred_pos = predicted[i] == positive;
        const bool true_pos = truth[i] == positive;
        if (pred_pos && true_pos) ++c.tp;
        else if (pred_pos) ++c.fp;
        else if (true_pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

ClassificationMetrics classification_metrics(const ConfusionCounts& counts) {
    ClassificationMetrics m;
    auto ratio = [&m](std::size_t num, std::size_t den, const char* name) {
        if (den == 0) {
            m.warnings.push_back(std::string(name) + " undefined: zero denominator");
            return std::numeric_limits<double>::quiet_NaN();
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.precision = ratio(counts.tp, counts.tp + counts.fp, "precision");
    m.recall = ratio(counts.tp, counts.tp + counts.fn, "recall");
    m.npv = ratio(counts.tn, counts.tn + counts.fn, "npv");
    m.specificity = ratio(counts.tn, counts.tn + counts.fp, "specificity");
    return m;
}

namespace {

struct Groups {
    std::vector<double> pooled;
    std::size_t size_a = 0;
    double total = 0.0;
    double observed = 0.0;
    double threshold = 0.0;

    double statistic(double sum_a) const {
        const auto na = static_cast<double>(size_a);
        const auto nb = static_cast<double>(pooled.size() - size_a);
        return sum_a / na - (total - sum_a) / nb;
    }
};

Groups make_groups(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValueError("permutation test needs two non-empty groups");
    Groups g;
    g.pooled.assign(a.begin(), a.end());
    g.pooled.insert(g.pooled.end(), b.begin(), b.end());
    g.size_a = a.size();
    double sum_a = 0.0;
    for (double v : a) sum_a += v;
    for (double v : g.pooled) g.total += v;
    g.observed = g.statistic(sum_a);
    // relabelings that reproduce the observed split must count as extreme
    // despite summation-order rounding
    g.threshold = std::abs(g.observed) - 1e-12 * std::max(1.0, std::abs(g.observed));
    return g;
}

}  // namespace

PermTestResult permutation_test(std::span<const double> a, std::span<const double> b, std::size_t n_permutations,
                                std::uint64_t seed) {
    if (n_permutations < 1) throw ValueError("permutation test needs at least one permutation");
    Groups g = make_groups(a, b);
    std::mt19937_64 rng(seed);
    std::size_t extreme = 0;
    for (std::size_t p = 0; p < n_permutations; ++p) {
        std::shuffle(g.pooled.begin(), g.pooled.end(), rng);
        double sum_a = 0.0;
        for (std::size_t i = 0; i < g.size_a; ++i) sum_a += g.pooled[i];
        if (std::abs(g.statistic(sum_a)) >= g.threshold) ++extreme;
    }
    PermTestResult r;
    r.observed = g.observed;
    r.n_permutations = n_permutations;
    r.n_extreme = extreme;
    r.seed = seed;
    r.p_value = static_cast<double>(extreme + 1) / static_cast<double>(n_permutations + 1);
    return r;
}

PermTestResult exact_permutation_test(std::span<const double> a, std::span<const double> b) {
    const Groups g = make_groups(a, b);
    const std::size_t n = g.pooled.size();
    double splits = 1.0;
    for (std::size_t i = 0; i < g.size_a; ++i) {
        splits = splits * static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    if (splits > 1e7) throw ValueError("exact permutation test limited to 10^7 splits");

    std::vector<bool> in_a(n, false);
    std::fill(in_a.begin(), in_a.begin() + static_cast<std::ptrdiff_t>(g.size_a), true);
    std::size_t total = 0;
    std::size_t extreme = 0;
    do {
        double sum_a = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (in_a[i]) sum_a += g.pooled[i];
        }
        if (std::abs(g.statistic(sum_a)) >= g.threshold) ++extreme;
        ++total;
    } while (std::prev_permutation(in_a.begin(), in_a.end()));

    PermTestResult r;
    r.observed = g.observed;
    r.n_permutations = total;
    r.n_extreme = extreme;
    r.exact = true;
    r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    return r;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

}  // namespace tsxai
