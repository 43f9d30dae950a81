#pragma once

// Explanation-quality and classification metrics, plus the permutation test
// used to compare single models against ensembles.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tsxai {

/// The k highest-scoring time indices, most relevant first.
struct TopKSet {
    std::size_t k = 0;
    std::vector<std::size_t> indices;

    bool contains(std::size_t t) const;
    friend bool operator==(const TopKSet&, const TopKSet&) = default;
};

/// Requires 1 <= k <= scores.size(). Equal scores rank the lower index first.
TopKSet top_k(std::span<const double> scores, std::size_t k);

/// |R ∩ Y| / |Y|. Throws ValueError for an empty Y.
double relevance_accuracy(const TopKSet& top, std::span<const std::size_t> relevant);

enum class ConsistencyForm {
    /// Mean of |R_m ∩ R_n| / k over unordered pairs m < n; 1 iff all sets agree.
    distinct_pairs,
    /// (1/M) * sum over all ordered (m, n) including m == n, as literally
    /// written in the source formulation; ranges over [1, M].
    full_double_sum,
};

/// Agreement of the top-k sets produced by M >= 2 models for one sample.
double relevance_consistency(std::span<const TopKSet> sets, ConsistencyForm form = ConsistencyForm::distinct_pairs);

struct RelevanceRatio {
    std::size_t k = 0;
    std::size_t length = 0;
    std::vector<double> ratio;  // ratio[j]: fraction of samples whose j-th relevant index is in the top-k
    double baseline = 0.0;      // k / T, the expected ratio of a random time step
};

/// `relevant_sets[i]` must be sorted and all of equal size; `tops[i]` is the
/// top-k set of sample i.
RelevanceRatio relevance_ratio(std::span<const std::vector<std::size_t>> relevant_sets,
                               std::span<const TopKSet> tops, std::size_t length);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

ConfusionCounts confusion_counts(std::span<const int> predicted, std::span<const int> truth, int positive = 1);

/// Undefined ratios (zero denominator) are NaN and add a warning.
struct ClassificationMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double npv = 0.0;
    double specificity = 0.0;
    std::vector<std::string> warnings;
};

ClassificationMetrics classification_metrics(const ConfusionCounts& counts);

struct PermTestResult {
    double observed = 0.0;  // mean(a) - mean(b)
    double p_value = 1.0;
    std::size_t n_permutations = 0;
    std::size_t n_extreme = 0;  // relabelings with |stat| >= |observed|
    std::uint64_t seed = 0;
    bool exact = false;
};

/// Two-sided Monte Carlo test on the difference of means:
/// p = (n_extreme + 1) / (n_permutations + 1).
PermTestResult permutation_test(std::span<const double> a, std::span<const double> b,
                                std::size_t n_permutations = 10000, std::uint64_t seed = 0);

/// Enumerates every split of the pooled values into groups of |a| and |b|;
/// p = n_extreme / C(|a| + |b|, |a|). Limited to 10^7 splits.
PermTestResult exact_permutation_test(std::span<const double> a, std::span<const double> b);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for fewer than two values
};

Summary summarize(std::span<const double> values);

}  // namespace tsxai
