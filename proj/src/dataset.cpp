#include "tsxai/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "text.hpp"
#include "tsxai/errors.hpp"

namespace tsxai {

void LabeledDataset::validate() const {
    if (series.batch() != labels.size()) {
        throw ShapeError("dataset '" + name + "': " + std::to_string(series.batch()) + " series but " +
                         std::to_string(labels.size()) + " labels");
    }
    if (series.channels() != 1) throw ShapeError("dataset '" + name + "': expected univariate series");
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= label_values.size()) {
            throw ValueError("dataset '" + name + "': label index " + std::to_string(label) + " has no mapping");
        }
    }
    if (!relevant_sets.empty()) {
        if (relevant_sets.size() != labels.size()) {
            throw ShapeError("dataset '" + name + "': " + std::to_string(relevant_sets.size()) +
                             " relevant sets for " + std::to_string(labels.size()) + " samples");
        }
        for (const auto& set : relevant_sets) {
            for (std::size_t idx : set) {
                if (idx >= length()) {
                    throw ValueError("dataset '" + name + "': relevant index " + std::to_string(idx) +
                                     " outside series length " + std::to_string(length()));
                }
            }
        }
    }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.name = name;
    out.split = split;
    out.label_values = label_values;
    out.delimiter = delimiter;
    out.series = series.gather(rows);
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(labels.at(r));
    if (!relevant_sets.empty()) {
        for (std::size_t r : rows) out.relevant_sets.push_back(relevant_sets.at(r));
    }
    return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (int label : labels) ++counts.at(static_cast<std::size_t>(label));
    return counts;
}

namespace {

char detect_delimiter(std::string_view line) {
    if (line.find('\t') != std::string_view::npos) return '\t';
    if (line.find(',') != std::string_view::npos) return ',';
    return ' ';
}

}  // namespace

LabeledDataset load_ucr(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file '" + path.string() + "'", 0);

    LabeledDataset data;
    data.name = path.stem().string();
    std::vector<double> raw_labels;
    std::vector<double> values;
    std::size_t width = 0;
    std::size_t line_no = 0;
    bool have_delim = false;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (!have_delim) {
            data.delimiter = detect_delimiter(trimmed);
            have_delim = true;
        }
        const auto cells = text::split(trimmed, data.delimiter);
        if (cells.size() < 2) throw ParseError("row has no series values", line_no);
        if (width == 0) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw ParseError("ragged row: " + std::to_string(cells.size()) + " columns, expected " +
                                 std::to_string(width),
                             line_no);
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto v = text::parse_double(cells[i]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError("column " + std::to_string(i + 1) + " is not a finite number: '" +
                                     std::string(cells[i]) + "'",
                                 line_no);
            }
            if (i == 0) {
                raw_labels.push_back(*v);
            } else {
                values.push_back(*v);
            }
        }
    }
    if (raw_labels.empty()) throw ParseError("dataset file '" + path.string() + "' is empty", 0);

    data.label_values = raw_labels;
    std::sort(data.label_values.begin(), data.label_values.end());
    data.label_values.erase(std::unique(data.label_values.begin(), data.label_values.end()), data.label_values.end());
    for (double v : raw_labels) {
        const auto it = std::lower_bound(data.label_values.begin(), data.label_values.end(), v);
        data.labels.push_back(static_cast<int>(it - data.label_values.begin()));
    }
    data.series = Tensor3(raw_labels.size(), 1, width - 1, std::move(values));
    return data;
}

void write_ucr(const LabeledDataset& data, const std::filesystem::path& path, char delimiter) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset file '" + path.string() + "'");
    for (std::size_t n = 0; n < data.size(); ++n) {
        out << text::format_double(data.label_values[static_cast<std::size_t>(data.labels[n])]);
        for (double v : data.series.series(n, 0)) out << delimiter << text::format_double(v);
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::filesystem::path relevant_sidecar_path(const std::filesystem::path& data_path) {
    auto out = data_path;
    out.replace_filename(data_path.stem().string() + ".relevant.csv");
    return out;
}

std::vector<std::vector<std::size_t>> load_relevant_sets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open relevant-set file '" + path.string() + "'", 0);
    std::vector<std::vector<std::size_t>> sets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::size_t> set;
        const auto trimmed = text::trim(line);
        if (!trimmed.empty()) {
            for (auto cell : text::split(trimmed, ',')) {
                const auto idx = text::parse_index(cell);
                if (!idx) throw ParseError("invalid time index '" + std::string(cell) + "'", line_no);
                set.push_back(*idx);
            }
        }
        std::sort(set.begin(), set.end());
        sets.push_back(std::move(set));
    }
    // a trailing newline does not introduce an extra empty set
    return sets;
}

void write_relevant_sets(std::span<const std::vector<std::size_t>> sets, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write relevant-set file '" + path.string() + "'");
    for (const auto& set : sets) {
        for (std::size_t i = 0; i < set.size(); ++i) out << (i ? "," : "") << set[i];
        out << '\n';
    }
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    LabeledDataset data = load_ucr(path);
    const auto sidecar = relevant_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        data.relevant_sets = load_relevant_sets(sidecar);
        data.validate();
    }
    return data;
}

void write_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
    write_ucr(data, path, data.delimiter == ' ' ? ',' : data.delimiter);
    if (data.has_relevant_sets()) write_relevant_sets(data.relevant_sets, relevant_sidecar_path(path));
}

void z_normalize(LabeledDataset& data) {
    for (std::size_t n = 0; n < data.series.batch(); ++n) {
        auto s = data.series.series(n, 0);
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        double var = 0.0;
        for (double v : s) var += (v - mean) * (v - mean);
        var /= static_cast<double>(s.size());
        const double sd = std::sqrt(var);
        for (double& v : s) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    }
}

std::uint64_t fingerprint(const LabeledDataset& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* bytes, std::size_t count) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < count; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t dims[3] = {data.series.batch(), data.series.channels(), data.series.length()};
    mix(dims, sizeof(dims));
    mix(data.labels.data(), data.labels.size() * sizeof(int));
    mix(data.series.data().data(), data.series.size() * sizeof(double));
    return h;
}

void remap_labels(LabeledDataset& data, std::span<const double> label_values) {
    for (int& label : data.labels) {
        const double original = data.label_values.at(static_cast<std::size_t>(label));
        const auto it = std::find(label_values.begin(), label_values.end(), original);
        if (it == label_values.end()) {
            throw ValueError("dataset '" + data.name + "': label " + text::format_double(original) +
                             " is unknown to the reference mapping");
        }
        label = static_cast<int>(it - label_values.begin());
    }
    data.label_values.assign(label_values.begin(), label_values.end());
}

LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b) {
    if (a.length() != b.length()) {
        throw ShapeError("cannot concatenate series of length " + std::to_string(a.length()) + " and " +
                         std::to_string(b.length()));
    }
    if (a.has_relevant_sets() != b.has_relevant_sets()) {
        throw ValueError("cannot concatenate datasets where only one carries relevant sets");
    }
    std::vector<double> merged = a.label_values;
    merged.insert(merged.end(), b.label_values.begin(), b.label_values.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    LabeledDataset left = a;
    LabeledDataset right = b;
    remap_labels(left, merged);
    remap_labels(right, merged);

    LabeledDataset out;
    out.name = a.name;
    out.delimiter = a.delimiter;
    out.label_values = merged;
    std::vector<double> values(left.series.data().begin(), left.series.data().end());
    values.insert(values.end(), right.series.data().begin(), right.series.data().end());
    out.series = Tensor3(a.size() + b.size(), 1, a.length(), std::move(values));
    out.labels = left.labels;
    out.labels.insert(out.labels.end(), right.labels.begin(), right.labels.end());
    out.relevant_sets = left.relevant_sets;
    out.relevant_sets.insert(out.relevant_sets.end(), right.relevant_sets.begin(), right.relevant_sets.end());
    return out;
}

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& pooled, double train_fraction,
                                                           std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValueError("train_fraction must lie in (0, 1)");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t c = 0; c < pooled.num_classes(); ++c) {
        std::vector<std::size_t> rows;
        for (std::size_t n = 0; n < pooled.size(); ++n) {
            if (static_cast<std::size_t>(pooled.labels[n]) == c) rows.push_back(n);
        }
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
        train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    auto train = pooled.subset(train_rows);
    auto test = pooled.subset(test_rows);
    train.split = "train";
    test.split = "test";
    return {std::move(train), std::move(test)};
}

}  // namespace tsxai
