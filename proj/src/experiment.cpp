#include "tsxai/experiment.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include "tsxai/cam.hpp"
#include "tsxai/ensemble.hpp"
#include "tsxai/errors.hpp"
#include "tsxai/parallel.hpp"

namespace tsxai {

std::string training_key(const LabeledDataset& data, const Architecture& arch, const TrainConfig& config) {
    std::uint64_t h = fingerprint(data);
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(arch.input_channels);
    mix(arch.num_classes);
    for (const auto& b : arch.blocks) {
        mix(b.filters);
        mix(b.kernel);
    }
    mix(config.epochs);
    mix(config.batch_size);
    mix(std::bit_cast<std::uint64_t>(config.learning_rate));
    mix(config.shuffle ? 1 : 0);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

FcnParams train_or_load(const LabeledDataset& data, const Architecture& arch, const TrainConfig& config,
                        const std::optional<std::filesystem::path>& checkpoint, TrainLog* log) {
    if (checkpoint && std::filesystem::exists(*checkpoint)) {
        FcnParams params = load_checkpoint(*checkpoint);
        if (!(params.arch == arch)) {
            throw ValueError("checkpoint '" + checkpoint->string() + "' has architecture " + params.arch.describe() +
                             ", expected " + arch.describe());
        }
        return params;
    }
    TrainResult result = fcn_train(data, arch, config);
    if (checkpoint) {
        std::filesystem::create_directories(checkpoint->parent_path());
        auto tmp = *checkpoint;
        tmp += ".tmp";
        save_checkpoint(result.params, tmp);
        std::filesystem::rename(tmp, *checkpoint);
    }
    if (log) *log = std::move(result.log);
    return std::move(result.params);
}

void EvaluationConfig::validate(std::size_t length) const {
    arch.validate();
    train.validate();
    if (single_runs < 1 || ensemble_runs < 1) throw ValueError("need at least one single and one ensemble run");
    if (single_runs > 999 || ensemble_runs > 999 || members > 999) {
        throw ValueError("runs and ensemble size are limited to 999");
    }
    if (members < 2) throw ValueError("ensemble relevance uncertainty requires M >= 2 members");
    if (accuracy_k.empty()) throw ValueError("relevance-accuracy k list is empty");
    if (consistency_k.empty()) throw ValueError("consistency k list is empty");
    for (const auto* ks : {&accuracy_k, &consistency_k}) {
        for (std::size_t k : *ks) {
            if (k < 1 || k > length) {
                throw ValueError("k = " + std::to_string(k) + " outside [1, " + std::to_string(length) + "]");
            }
        }
    }
    if (permutations < 1) throw ValueError("permutation count must be positive");
    if (explain_class && *explain_class >= arch.num_classes) throw ValueError("explained class out of range");
    if (positive_class < 0 || static_cast<std::size_t>(positive_class) >= arch.num_classes) {
        throw ValueError("positive class out of range");
    }
    if (resplit_train_fraction && !(*resplit_train_fraction > 0.0 && *resplit_train_fraction < 1.0)) {
        throw ValueError("resplit fraction must lie in (0, 1)");
    }
}

namespace {

struct Job {
    bool ensemble = false;
    std::size_t run = 0;
    std::size_t member = 0;
    std::uint64_t seed = 0;
};

// Per-run outputs of one model kind on its test split.
struct RunOutput {
    ClassificationMetrics classification;
    std::vector<std::vector<double>> scores;  // per sample relevance used for top-k
};

std::vector<int> choose_classes(const std::vector<int>& predicted, const std::optional<std::size_t>& fixed) {
    if (!fixed) return predicted;
    return std::vector<int>(predicted.size(), static_cast<int>(*fixed));
}

std::string dataset_label(const LabeledDataset& data) {
    std::string name = data.name;
    for (const char* suffix : {"_TRAIN", "_TEST", "_train", "_test"}) {
        const std::string s(suffix);
        if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0) {
            name.resize(name.size() - s.size());
            break;
        }
    }
    return name.empty() ? "dataset" : name;
}

bool any_nan(const std::vector<double>& v) {
    for (double x : v) {
        if (std::isnan(x)) return true;
    }
    return false;
}

}  // namespace

EvaluationResult run_evaluation(const LabeledDataset& train_in, const LabeledDataset& test_in,
                                const EvaluationConfig& config) {
    train_in.validate();
    test_in.validate();
    config.validate(test_in.length());
    if (train_in.length() != test_in.length()) throw ShapeError("train and test series lengths differ");
    auto say = [&](const std::string& msg) {
        if (config.log) config.log(msg);
    };

    const std::size_t runs = std::max(config.single_runs, config.ensemble_runs);
    std::vector<LabeledDataset> train_splits;
    std::vector<LabeledDataset> test_splits;
    if (config.resplit_train_fraction) {
        const LabeledDataset pooled = concatenate(train_in, test_in);
        for (std::size_t r = 0; r < runs; ++r) {
            auto [tr, te] = stratified_split(pooled, *config.resplit_train_fraction, config.seed + 7919 * (r + 1));
            train_splits.push_back(std::move(tr));
            test_splits.push_back(std::move(te));
        }
    } else {
        LabeledDataset test = test_in;
        remap_labels(test, train_in.label_values);
        train_splits.assign(1, train_in);
        test_splits.assign(1, std::move(test));
    }
    auto split_of = [&](std::size_t run) -> std::size_t { return config.resplit_train_fraction ? run : 0; };

    std::vector<Job> jobs;
    for (std::size_t r = 0; r < config.single_runs; ++r) jobs.push_back({false, r, 0, config.single_seed(r)});
    for (std::size_t r = 0; r < config.ensemble_runs; ++r) {
        for (std::size_t m = 0; m < config.members; ++m) jobs.push_back({true, r, m, config.ensemble_seed(r) + m});
    }

    std::vector<FcnParams> models(jobs.size());
    say("training " + std::to_string(jobs.size()) + " models (" + config.arch.describe() + ", " +
        std::to_string(config.train.epochs) + " epochs)");
    parallel_for(jobs.size(), config.workers, [&](std::size_t j) {
        const Job& job = jobs[j];
        const LabeledDataset& train = train_splits[split_of(job.run)];
        TrainConfig tc = config.train;
        tc.seed = job.seed;
        std::optional<std::filesystem::path> ckpt;
        if (config.model_cache) {
            char name[64];
            std::snprintf(name, sizeof(name), "%s_r%03zu_m%03zu_seed%llu.bin", job.ensemble ? "ensemble" : "single",
                          job.run, job.member, static_cast<unsigned long long>(job.seed));
            ckpt = *config.model_cache / training_key(train, config.arch, tc) / name;
        }
        try {
            models[j] = train_or_load(train, config.arch, tc, ckpt);
        } catch (const Error& e) {
            throw Error(std::string(job.ensemble ? "ensemble " : "single model ") + std::to_string(job.run) +
                        (job.ensemble ? " member " + std::to_string(job.member) : std::string()) + ": " + e.what());
        }
        say(std::string("  done: ") + (job.ensemble ? "ensemble " : "single ") + std::to_string(job.run) +
            (job.ensemble ? "/" + std::to_string(job.member) : std::string()));
    });

    // Evaluate each run on its test split.
    std::vector<RunOutput> single_out(config.single_runs);
    std::vector<RunOutput> ensemble_out(config.ensemble_runs);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].ensemble) continue;
        const LabeledDataset& test = test_splits[split_of(jobs[j].run)];
        const FcnParams& model = models[j];
        const Prediction pred = predict(model, test.series);
        const auto maps = explain(model, test.series, choose_classes(pred.labels, config.explain_class));
        RunOutput& out = single_out[jobs[j].run];
        out.classification =
            classification_metrics(confusion_counts(pred.labels, test.labels, config.positive_class));
        for (const auto& m : maps) out.scores.push_back(m.scaled);
    }
    for (std::size_t r = 0; r < config.ensemble_runs; ++r) {
        Ensemble ens;
        ens.arch = config.arch;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].ensemble && jobs[j].run == r) {
                ens.members.push_back(models[j]);
                ens.seeds.push_back(jobs[j].seed);
            }
        }
        const LabeledDataset& test = test_splits[split_of(r)];
        const Prediction pred = ensemble_predict(ens, test.series, config.workers);
        const auto rel =
            ensemble_relevance(ens, test.series, choose_classes(pred.labels, config.explain_class), config.workers);
        RunOutput& out = ensemble_out[r];
        out.classification =
            classification_metrics(confusion_counts(pred.labels, test.labels, config.positive_class));
        for (const auto& e : rel) out.scores.push_back(e.mu);
    }

    EvaluationResult result;
    result.dataset = dataset_label(test_in);
    auto fill = [&](KindResults& kind, const std::vector<RunOutput>& outs) {
        for (std::size_t r = 0; r < outs.size(); ++r) {
            kind.classification.push_back(outs[r].classification);
            const LabeledDataset& test = test_splits[split_of(r)];
            if (!test.has_relevant_sets()) continue;
            for (std::size_t k : config.accuracy_k) {
                std::vector<TopKSet> tops;
                double acc = 0.0;
                for (std::size_t i = 0; i < test.size(); ++i) {
                    tops.push_back(top_k(outs[r].scores[i], k));
                    acc += relevance_accuracy(tops.back(), test.relevant_sets[i]);
                }
                kind.accuracy[k].push_back(acc / static_cast<double>(test.size()));
                kind.ratio[k].push_back(relevance_ratio(test.relevant_sets, tops, test.length()));
            }
        }
        // Consistency compares runs sample by sample, which needs a shared test split.
        if (outs.size() >= 2 && !config.resplit_train_fraction) {
            const std::size_t n = test_splits[0].size();
            for (std::size_t k : config.consistency_k) {
                auto& values = kind.consistency[k];
                std::vector<TopKSet> sets(outs.size());
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t r = 0; r < outs.size(); ++r) sets[r] = top_k(outs[r].scores[i], k);
                    values.push_back(relevance_consistency(sets));
                }
            }
        }
    };
    fill(result.single, single_out);
    fill(result.ensemble, ensemble_out);

    // Rows
    auto compare = [&](const std::vector<double>& a, const std::vector<double>& b) -> std::optional<double> {
        if (a.empty() || b.empty() || any_nan(a) || any_nan(b)) return std::nullopt;
        return permutation_test(a, b, config.permutations, config.seed).p_value;
    };
    auto emit = [&](const std::string& metric, std::optional<std::size_t> k, const std::vector<double>& single,
                    const std::vector<double>& ensemble) {
        const auto p = compare(single, ensemble);
        const Summary s = summarize(single);
        const Summary e = summarize(ensemble);
        result.rows.push_back({result.dataset, "single", metric, k, s.mean, s.std, p});
        result.rows.push_back({result.dataset, "ensemble", metric, k, e.mean, e.std, p});
    };
    using Getter = double ClassificationMetrics::*;
    const std::pair<const char*, Getter> classification_fields[] = {
        {"precision", &ClassificationMetrics::precision},
        {"recall", &ClassificationMetrics::recall},
        {"npv", &ClassificationMetrics::npv},
        {"specificity", &ClassificationMetrics::specificity},
    };
    for (const auto& [name, field] : classification_fields) {
        std::vector<double> s;
        std::vector<double> e;
        for (const auto& m : result.single.classification) s.push_back(m.*field);
        for (const auto& m : result.ensemble.classification) e.push_back(m.*field);
        emit(name, std::nullopt, s, e);
    }
    for (const auto& m : result.single.classification) {
        for (const auto& w : m.warnings) say("warning (single): " + w);
    }
    for (const auto& m : result.ensemble.classification) {
        for (const auto& w : m.warnings) say("warning (ensemble): " + w);
    }
    for (std::size_t k : config.accuracy_k) {
        if (!result.single.accuracy.count(k)) continue;
        emit("relevance_accuracy", k, result.single.accuracy[k], result.ensemble.accuracy[k]);
    }
    for (std::size_t k : config.consistency_k) {
        if (!result.single.consistency.count(k) || !result.ensemble.consistency.count(k)) continue;
        emit("relevance_consistency", k, result.single.consistency[k], result.ensemble.consistency[k]);
    }
    for (std::size_t k : config.accuracy_k) {
        if (!result.single.ratio.count(k)) continue;
        const auto& sr = result.single.ratio[k];
        const auto& er = result.ensemble.ratio[k];
        const std::size_t positions = sr.front().ratio.size();
        for (std::size_t j = 0; j < positions; ++j) {
            std::vector<double> s;
            std::vector<double> e;
            for (const auto& r : sr) s.push_back(r.ratio[j]);
            for (const auto& r : er) e.push_back(r.ratio[j]);
            const Summary ss = summarize(s);
            const Summary es = summarize(e);
            const std::string metric = "relevance_ratio_" + std::to_string(j + 1);
            result.rows.push_back({result.dataset, "single", metric, k, ss.mean, ss.std, std::nullopt});
            result.rows.push_back({result.dataset, "ensemble", metric, k, es.mean, es.std, std::nullopt});
        }
        result.rows.push_back(
            {result.dataset, "random", "relevance_ratio_baseline", k, sr.front().baseline, 0.0, std::nullopt});
    }
    return result;
}

}  // namespace tsxai
