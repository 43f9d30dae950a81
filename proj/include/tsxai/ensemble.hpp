#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tsxai/cam.hpp"
#include "tsxai/dataset.hpp"
#include "tsxai/fcn.hpp"

namespace tsxai {

/// Independently trained FCNs sharing one architecture.
struct Ensemble {
    Architecture arch;
    std::vector<FcnParams> members;
    std::vector<std::uint64_t> seeds;

    std::size_t size() const noexcept { return members.size(); }
    void validate() const;
};

/// Called once per finished member with (member index, its training log).
using MemberCallback = std::function<void(std::size_t, const TrainLog&)>;

/// Trains M members; member i uses seed base_seed + i (config.seed is ignored).
/// Members run on up to `workers` threads and the result does not depend on
/// the worker count. A failing member aborts the call with its index.
Ensemble train_ensemble(const LabeledDataset& data, std::size_t members, std::uint64_t base_seed,
                        const Architecture& arch, const TrainConfig& config, std::size_t workers = 1,
                        const MemberCallback& on_member = {});

/// Mean of member softmax outputs, argmax with ties toward the lower class.
Prediction ensemble_predict(const Ensemble& ensemble, const Tensor3& batch, std::size_t workers = 1);

struct EnsembleRelevance {
    std::size_t class_id = 0;
    std::vector<double> mu;        // mean of member maps
    std::vector<double> sigma;     // sample standard deviation (M - 1 denominator)
    double epsilon = 0.0;          // mean of sigma over time
    std::vector<double> filtered;  // mu where sigma < epsilon, else 0
};

/// Aggregates per-member relevance maps (already clamped and scaled) of one
/// sample. Requires at least two members. Results do not depend on member order.
EnsembleRelevance aggregate_relevance(std::span<const std::vector<double>> member_maps, std::size_t class_id);

double epsilon_threshold(std::span<const double> sigma);

/// Keeps mu[t] when sigma[t] < eps (strictly), zero otherwise.
std::vector<double> filter_relevance(std::span<const double> mu, std::span<const double> sigma, double eps);

/// Per-member relevance maps for every sample: result[m][n]. Sample n is
/// explained for classes[n].
std::vector<std::vector<RelevanceMap>> member_relevance(const Ensemble& ensemble, const Tensor3& batch,
                                                        std::span<const int> classes, std::size_t workers = 1);

/// Relevance statistics of one sample (`batch` must hold exactly one). The
/// class defaults to the ensemble's predicted class.
EnsembleRelevance ensemble_relevance(const Ensemble& ensemble, const Tensor3& sample,
                                     std::optional<std::size_t> class_id = std::nullopt);

/// Relevance statistics for every sample, explaining classes[n] for sample n.
std::vector<EnsembleRelevance> ensemble_relevance(const Ensemble& ensemble, const Tensor3& batch,
                                                  std::span<const int> classes, std::size_t workers = 1);

}  // namespace tsxai
