#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tsxai/cam.hpp"
#include "tsxai/ensemble.hpp"
#include "tsxai/errors.hpp"
#include "tsxai/fcn.hpp"
#include "tsxai/metrics.hpp"
#include "tsxai/synthdata.hpp"

namespace py = pybind11;
using namespace tsxai;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

/// Accepts [N, T] (univariate) or [N, C, T].
Tensor3 to_tensor(const Array& x) {
    if (x.ndim() == 2) {
        return Tensor3(x.shape(0), 1, x.shape(1), std::vector<double>(x.data(), x.data() + x.size()));
    }
    if (x.ndim() == 3) {
        return Tensor3(x.shape(0), x.shape(1), x.shape(2), std::vector<double>(x.data(), x.data() + x.size()));
    }
    throw ShapeError("expected a [N, T] or [N, C, T] array, got " + std::to_string(x.ndim()) + " dimensions");
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

Array to_array(std::span<const double> v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

LabeledDataset to_dataset(const Array& x, const std::vector<int>& labels) {
    LabeledDataset d;
    d.series = to_tensor(x);
    if (labels.size() != d.series.batch()) throw ShapeError("labels and series disagree on the sample count");
    d.labels = labels;
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw ValueError("labels must be class indices >= 0");
        max_label = std::max(max_label, l);
    }
    for (int c = 0; c <= max_label; ++c) d.label_values.push_back(c);
    return d;
}

py::dict relevance_dict(const RelevanceMap& m) {
    py::dict d;
    d["sample_id"] = m.sample_id;
    d["class_id"] = m.class_id;
    d["raw"] = to_array(m.raw);
    d["clamped"] = to_array(m.clamped);
    d["scaled"] = to_array(m.scaled);
    return d;
}

py::dict ensemble_relevance_dict(const EnsembleRelevance& r) {
    py::dict d;
    d["class_id"] = r.class_id;
    d["mu"] = to_array(r.mu);
    d["sigma"] = to_array(r.sigma);
    d["epsilon"] = r.epsilon;
    d["filtered"] = to_array(r.filtered);
    return d;
}

TrainConfig train_config(std::size_t epochs, std::size_t batch_size, double learning_rate, std::uint64_t seed) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.learning_rate = learning_rate;
    tc.seed = seed;
    return tc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "FCN classifiers, class activation maps and deep-ensemble relevance for time series";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<ValueError>(m, "ValueError", base.ptr());
    py::register_exception<StateError>(m, "StateError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    py::class_<Architecture>(m, "Architecture")
        .def_static("paper", &Architecture::paper, py::arg("num_classes") = 2, py::arg("input_channels") = 1)
        .def_static("desk", &Architecture::desk, py::arg("num_classes") = 2, py::arg("input_channels") = 1)
        .def_static(
            "custom",
            [](std::vector<std::size_t> filters, std::vector<std::size_t> kernels, std::size_t num_classes,
               std::size_t input_channels) {
                if (filters.size() != 3 || kernels.size() != 3) throw ValueError("expected 3 filters and 3 kernels");
                Architecture a;
                a.num_classes = num_classes;
                a.input_channels = input_channels;
                for (std::size_t i = 0; i < 3; ++i) a.blocks[i] = {filters[i], kernels[i]};
                a.validate();
                return a;
            },
            py::arg("filters"), py::arg("kernels") = std::vector<std::size_t>{7, 5, 3}, py::arg("num_classes") = 2,
            py::arg("input_channels") = 1)
        .def_readonly("num_classes", &Architecture::num_classes)
        .def_readonly("input_channels", &Architecture::input_channels)
        .def("__repr__", [](const Architecture& a) { return "Architecture(" + a.describe() + ")"; });

    py::class_<FcnParams>(m, "Model")
        .def_static("init", &FcnParams::init, py::arg("arch"), py::arg("seed") = 0)
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def("save", [](const FcnParams& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
        .def_readonly("arch", &FcnParams::arch)
        .def_property_readonly("parameter_count", &FcnParams::parameter_count)
        .def(
            "logits", [](const FcnParams& p, const Array& x) { return to_array(fcn_forward(p, to_tensor(x)).logits); },
            py::arg("x"))
        .def(
            "predict_proba", [](const FcnParams& p, const Array& x) { return to_array(predict(p, to_tensor(x)).probs); },
            py::arg("x"))
        .def(
            "predict", [](const FcnParams& p, const Array& x) { return predict(p, to_tensor(x)).labels; }, py::arg("x"))
        .def(
            "explain",
            [](const FcnParams& p, const Array& x, std::optional<std::size_t> class_id) {
                py::list out;
                for (const auto& r : explain(p, to_tensor(x), class_id)) out.append(relevance_dict(r));
                return out;
            },
            py::arg("x"), py::arg("class_id") = py::none());

    m.def(
        "train",
        [](const Array& x, const std::vector<int>& labels, const Architecture& arch, std::size_t epochs,
           std::size_t batch_size, double learning_rate, std::uint64_t seed) {
            const auto data = to_dataset(x, labels);
            const auto tc = train_config(epochs, batch_size, learning_rate, seed);
            TrainResult result;
            {
                py::gil_scoped_release release;
                result = fcn_train(data, arch, tc);
            }
            py::list losses;
            for (const auto& e : result.log.epochs) losses.append(e.loss);
            return py::make_tuple(std::move(result.params), losses);
        },
        py::arg("x"), py::arg("labels"), py::arg("arch"), py::arg("epochs") = 150, py::arg("batch_size") = 16,
        py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
        "Trains one FCN; returns (model, per-epoch mean losses).");

    py::class_<Ensemble>(m, "Ensemble")
        .def(py::init([](std::vector<FcnParams> members) {
                 Ensemble e;
                 if (!members.empty()) e.arch = members.front().arch;
                 e.members = std::move(members);
                 e.validate();
                 return e;
             }),
             py::arg("members"))
        .def_readonly("members", &Ensemble::members)
        .def_readonly("seeds", &Ensemble::seeds)
        .def("__len__", &Ensemble::size)
        .def(
            "predict",
            [](const Ensemble& e, const Array& x, std::size_t workers) {
                return ensemble_predict(e, to_tensor(x), workers).labels;
            },
            py::arg("x"), py::arg("workers") = 1)
        .def(
            "predict_proba",
            [](const Ensemble& e, const Array& x, std::size_t workers) {
                return to_array(ensemble_predict(e, to_tensor(x), workers).probs);
            },
            py::arg("x"), py::arg("workers") = 1)
        .def(
            "relevance",
            [](const Ensemble& e, const Array& x, std::optional<std::vector<int>> classes, std::size_t workers) {
                const auto batch = to_tensor(x);
                const auto cls = classes ? *classes : ensemble_predict(e, batch, workers).labels;
                py::list out;
                for (const auto& r : ensemble_relevance(e, batch, cls, workers)) out.append(ensemble_relevance_dict(r));
                return out;
            },
            py::arg("x"), py::arg("classes") = py::none(), py::arg("workers") = 1,
            "Per-sample mean, spread, threshold and filtered relevance (default class: ensemble prediction).");

    m.def(
        "train_ensemble",
        [](const Array& x, const std::vector<int>& labels, std::size_t members, const Architecture& arch,
           std::size_t epochs, std::size_t batch_size, double learning_rate, std::uint64_t base_seed,
           std::size_t workers) {
            const auto data = to_dataset(x, labels);
            const auto tc = train_config(epochs, batch_size, learning_rate, base_seed);
            py::gil_scoped_release release;
            return train_ensemble(data, members, base_seed, arch, tc, workers);
        },
        py::arg("x"), py::arg("labels"), py::arg("members"), py::arg("arch"), py::arg("epochs") = 150,
        py::arg("batch_size") = 16, py::arg("learning_rate") = 1e-3, py::arg("base_seed") = 0,
        py::arg("workers") = 1);

    m.def(
        "aggregate_relevance",
        [](const Array& maps, std::size_t class_id) {
            if (maps.ndim() != 2) throw ShapeError("expected a [M, T] array of member relevance maps");
            std::vector<std::vector<double>> rows;
            for (py::ssize_t i = 0; i < maps.shape(0); ++i) {
                rows.emplace_back(maps.data(i, 0), maps.data(i, 0) + maps.shape(1));
            }
            return ensemble_relevance_dict(aggregate_relevance(rows, class_id));
        },
        py::arg("maps"), py::arg("class_id") = 0);

    m.def(
        "synthetic",
        [](std::size_t n_per_class, std::size_t length, std::size_t margin, double amplitude, double noise_variance,
           std::uint64_t seed) {
            SynthConfig cfg;
            cfg.length = length;
            cfg.margin = margin;
            cfg.amplitude = amplitude;
            cfg.noise_variance = noise_variance;
            cfg.seed = seed;
            const auto samples = generate_samples(n_per_class, cfg);
            Array x({samples.size(), length});
            std::vector<int> labels;
            std::vector<std::vector<std::size_t>> relevant;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                std::copy(samples[i].series.begin(), samples[i].series.end(), x.mutable_data(i, 0));
                labels.push_back(samples[i].label);
                relevant.push_back(samples[i].relevant);
            }
            return py::make_tuple(x, labels, relevant);
        },
        py::arg("n_per_class"), py::arg("length") = 250, py::arg("margin") = 10, py::arg("amplitude") = 2.0,
        py::arg("noise_variance") = 0.5, py::arg("seed") = 0,
        "Sinusoid plus noise with a class-dependent spike; returns (x [N, T], labels, relevant index lists).");

    m.def(
        "top_k", [](const std::vector<double>& scores, std::size_t k) { return top_k(scores, k).indices; },
        py::arg("scores"), py::arg("k"));
    m.def(
        "relevance_accuracy",
        [](const std::vector<double>& scores, const std::vector<std::size_t>& relevant, std::size_t k) {
            return relevance_accuracy(top_k(scores, k), relevant);
        },
        py::arg("scores"), py::arg("relevant"), py::arg("k"));
    m.def(
        "relevance_consistency",
        [](const std::vector<std::vector<double>>& score_maps, std::size_t k) {
            std::vector<TopKSet> sets;
            for (const auto& s : score_maps) sets.push_back(top_k(s, k));
            return relevance_consistency(sets);
        },
        py::arg("score_maps"), py::arg("k"));
    m.def(
        "relevance_ratio",
        [](const std::vector<std::vector<std::size_t>>& relevant, const std::vector<std::vector<double>>& scores,
           std::size_t k) {
            if (scores.empty()) throw ValueError("relevance_ratio needs at least one sample");
            std::vector<TopKSet> tops;
            for (const auto& s : scores) tops.push_back(top_k(s, k));
            const auto rr = relevance_ratio(relevant, tops, scores.front().size());
            return py::make_tuple(rr.ratio, rr.baseline);
        },
        py::arg("relevant"), py::arg("scores"), py::arg("k"), "Returns (per-position ratios, k / T baseline).");

    m.def(
        "classification_metrics",
        [](const std::vector<int>& predicted, const std::vector<int>& truth, int positive) {
            const auto c = classification_metrics(confusion_counts(predicted, truth, positive));
            py::dict d;
            d["precision"] = c.precision;
            d["recall"] = c.recall;
            d["npv"] = c.npv;
            d["specificity"] = c.specificity;
            d["warnings"] = c.warnings;
            return d;
        },
        py::arg("predicted"), py::arg("truth"), py::arg("positive") = 1);

    m.def(
        "permutation_test",
        [](const std::vector<double>& a, const std::vector<double>& b, std::optional<std::size_t> n_permutations,
           std::uint64_t seed) {
            const auto r = n_permutations ? permutation_test(a, b, *n_permutations, seed) : exact_permutation_test(a, b);
            py::dict d;
            d["observed"] = r.observed;
            d["p_value"] = r.p_value;
            d["n_permutations"] = r.n_permutations;
            d["n_extreme"] = r.n_extreme;
            d["exact"] = r.exact;
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("n_permutations") = 10000, py::arg("seed") = 0,
        "Two-sided difference-of-means test; n_permutations=None enumerates every split.");
}
