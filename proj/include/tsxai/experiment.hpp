#pragma once

// Single-model vs ensemble evaluation protocol: repeated independent training
// runs, classification metrics, relevance accuracy, relevance consistency,
// relevance ratios and permutation-test p-values.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsxai/dataset.hpp"
#include "tsxai/fcn.hpp"
#include "tsxai/metrics.hpp"
#include "tsxai/report.hpp"

namespace tsxai {

/// Hex key identifying (training data, architecture, training hyperparameters).
/// The seed is excluded; it is part of each checkpoint's file name instead.
std::string training_key(const LabeledDataset& data, const Architecture& arch, const TrainConfig& config);

/// Loads `checkpoint` when it exists, otherwise trains and writes it
/// atomically (temporary file + rename). With no path, always trains.
FcnParams train_or_load(const LabeledDataset& data, const Architecture& arch, const TrainConfig& config,
                        const std::optional<std::filesystem::path>& checkpoint, TrainLog* log = nullptr);

struct EvaluationConfig {
    Architecture arch = Architecture::desk();
    TrainConfig train;
    std::size_t single_runs = 10;
    std::size_t ensemble_runs = 10;
    std::size_t members = 10;
    std::uint64_t seed = 0;
    std::vector<std::size_t> accuracy_k = {9, 10, 11, 12, 15};
    std::vector<std::size_t> consistency_k = {5, 7, 10, 15};
    std::size_t permutations = 10000;
    std::optional<std::size_t> explain_class;  // default: each model's predicted class
    int positive_class = 1;
    std::optional<double> resplit_train_fraction;  // pool train+test and resplit per run
    std::optional<std::filesystem::path> model_cache;
    std::size_t workers = 1;
    std::function<void(const std::string&)> log;

    /// Throws ValueError on any invalid field; `length` is the series length.
    void validate(std::size_t length) const;

    /// Seed of single model `run`.
    std::uint64_t single_seed(std::size_t run) const { return seed + run; }
    /// Base seed of ensemble `run`; member m uses base + m.
    std::uint64_t ensemble_seed(std::size_t run) const { return seed + 1000 * (run + 1); }
};

struct KindResults {
    std::vector<ClassificationMetrics> classification;              // per run
    std::map<std::size_t, std::vector<double>> accuracy;            // k -> per-run mean relevance accuracy
    std::map<std::size_t, std::vector<RelevanceRatio>> ratio;       // k -> per-run relevance ratios
    std::map<std::size_t, std::vector<double>> consistency;         // k -> per-sample consistency across runs
};

struct EvaluationResult {
    std::string dataset;
    KindResults single;
    KindResults ensemble;
    std::vector<MetricRow> rows;
};

EvaluationResult run_evaluation(const LabeledDataset& train, const LabeledDataset& test,
                                const EvaluationConfig& config);

}  // namespace tsxai
