#include "tsxai/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsxai/errors.hpp"
#include "tsxai/parallel.hpp"

namespace tsxai {

namespace {

// Order-independent mean: values are sorted first and accumulated relative to
// the minimum, so identical inputs give back exactly that value.
double stable_mean(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    const double lo = values.front();
    double acc = 0.0;
    for (double v : values) acc += v - lo;
    return std::clamp(lo + acc / static_cast<double>(values.size()), lo, values.back());
}

}  // namespace

void Ensemble::validate() const {
    if (members.empty()) throw ValueError("ensemble has no members");
    if (seeds.size() != members.size()) throw ShapeError("ensemble seeds do not match its members");
    for (std::size_t m = 0; m < members.size(); ++m) {
        if (!(members[m].arch == arch)) {
            throw ShapeError("ensemble member " + std::to_string(m) + " has a different architecture");
        }
    }
}

Ensemble train_ensemble(const LabeledDataset& data, std::size_t members, std::uint64_t base_seed,
                        const Architecture& arch, const TrainConfig& config, std::size_t workers,
                        const MemberCallback& on_member) {
    if (members < 1) throw ValueError("an ensemble needs at least one member");
    config.validate();
    Ensemble ensemble;
    ensemble.arch = arch;
    ensemble.members.resize(members);
    ensemble.seeds.resize(members);
    std::vector<TrainLog> logs(members);
    parallel_for(members, workers, [&](std::size_t m) {
        TrainConfig member_config = config;
        member_config.seed = base_seed + m;
        ensemble.seeds[m] = member_config.seed;
        try {
            TrainResult r = fcn_train(data, arch, member_config);
            ensemble.members[m] = std::move(r.params);
            logs[m] = std::move(r.log);
        } catch (const TrainingError& e) {
            throw TrainingError("ensemble member " + std::to_string(m) + ": " + e.what(), e.epoch(), e.batch());
        } catch (const Error& e) {
            throw Error("ensemble member " + std::to_string(m) + ": " + e.what());
        }
    });
    if (on_member) {
        for (std::size_t m = 0; m < members; ++m) on_member(m, logs[m]);
    }
    return ensemble;
}

Prediction ensemble_predict(const Ensemble& ensemble, const Tensor3& batch, std::size_t workers) {
    ensemble.validate();
    std::vector<Prediction> member_preds(ensemble.size());
    parallel_for(ensemble.size(), workers,
                 [&](std::size_t m) { member_preds[m] = predict(ensemble.members[m], batch); });

    Prediction out;
    out.probs = Matrix(batch.batch(), ensemble.arch.num_classes);
    std::vector<double> values(ensemble.size());
    for (std::size_t n = 0; n < batch.batch(); ++n) {
        for (std::size_t c = 0; c < ensemble.arch.num_classes; ++c) {
            for (std::size_t m = 0; m < ensemble.size(); ++m) values[m] = member_preds[m].probs(n, c);
            out.probs(n, c) = stable_mean(values);
        }
        out.labels.push_back(static_cast<int>(argmax(out.probs.row(n))));
    }
    return out;
}

double epsilon_threshold(std::span<const double> sigma) {
    if (sigma.empty()) throw ValueError("epsilon_threshold of an empty series");
    double sum = 0.0;
    for (double s : sigma) sum += s;
    return sum / static_cast<double>(sigma.size());
}

std::vector<double> filter_relevance(std::span<const double> mu, std::span<const double> sigma, double eps) {
    if (mu.size() != sigma.size()) throw ShapeError("filter_relevance: mu and sigma lengths differ");
    std::vector<double> out(mu.size(), 0.0);
    for (std::size_t t = 0; t < mu.size(); ++t) {
        if (sigma[t] < eps) out[t] = mu[t];
    }
    return out;
}

EnsembleRelevance aggregate_relevance(std::span<const std::vector<double>> member_maps, std::size_t class_id) {
    const std::size_t members = member_maps.size();
    if (members < 2) {
        throw ValueError("relevance uncertainty requires M >= 2 ensemble members, got " + std::to_string(members));
    }
    const std::size_t length = member_maps[0].size();
    for (const auto& map : member_maps) {
        if (map.size() != length) throw ShapeError("aggregate_relevance: member maps differ in length");
    }
    EnsembleRelevance out;
    out.class_id = class_id;
    out.mu.resize(length);
    out.sigma.resize(length);
    std::vector<double> values(members);
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t m = 0; m < members; ++m) values[m] = member_maps[m][t];
        const double mean = stable_mean(values);  // leaves `values` sorted
        double sq = 0.0;
        for (double v : values) sq += (v - mean) * (v - mean);
        out.mu[t] = mean;
        out.sigma[t] = std::sqrt(sq / static_cast<double>(members - 1));
    }
    out.epsilon = length ? epsilon_threshold(out.sigma) : 0.0;
    out.filtered = filter_relevance(out.mu, out.sigma, out.epsilon);
    return out;
}

std::vector<std::vector<RelevanceMap>> member_relevance(const Ensemble& ensemble, const Tensor3& batch,
                                                        std::span<const int> classes, std::size_t workers) {
    ensemble.validate();
    std::vector<std::vector<RelevanceMap>> maps(ensemble.size());
    parallel_for(ensemble.size(), workers,
                 [&](std::size_t m) { maps[m] = explain(ensemble.members[m], batch, classes); });
    return maps;
}

std::vector<EnsembleRelevance> ensemble_relevance(const Ensemble& ensemble, const Tensor3& batch,
                                                  std::span<const int> classes, std::size_t workers) {
    if (ensemble.size() < 2) {
        throw ValueError("relevance uncertainty requires M >= 2 ensemble members, got " +
                         std::to_string(ensemble.size()));
    }
    const auto maps = member_relevance(ensemble, batch, classes, workers);
    std::vector<EnsembleRelevance> out;
    out.reserve(batch.batch());
    std::vector<std::vector<double>> sample_maps(ensemble.size());
    for (std::size_t n = 0; n < batch.batch(); ++n) {
        for (std::size_t m = 0; m < ensemble.size(); ++m) sample_maps[m] = maps[m][n].scaled;
        out.push_back(aggregate_relevance(sample_maps, static_cast<std::size_t>(classes[n])));
    }
    return out;
}

EnsembleRelevance ensemble_relevance(const Ensemble& ensemble, const Tensor3& sample,
                                     std::optional<std::size_t> class_id) {
    if (sample.batch() != 1) throw ShapeError("ensemble_relevance expects a single sample");
    if (ensemble.size() < 2) {
        throw ValueError("relevance uncertainty requires M >= 2 ensemble members, got " +
                         std::to_string(ensemble.size()));
    }
    const int c = class_id ? static_cast<int>(*class_id) : ensemble_predict(ensemble, sample).labels[0];
    const int classes[1] = {c};
    return ensemble_relevance(ensemble, sample, classes, 1).front();
}

}  // namespace tsxai
