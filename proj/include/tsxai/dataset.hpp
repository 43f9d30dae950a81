#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsxai/tensor.hpp"

namespace tsxai {

/// Univariate labeled series, optionally annotated with the known relevant
/// time steps of every sample.
struct LabeledDataset {
    std::string name;
    std::string split;
    Tensor3 series;                  // [N, 1, T]
    std::vector<int> labels;         // class indices in [0, num_classes)
    std::vector<double> label_values;  // class index -> label as written in the source file
    std::vector<std::vector<std::size_t>> relevant_sets;  // empty, or one sorted set per sample
    char delimiter = ',';

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t length() const noexcept { return series.length(); }
    std::size_t num_classes() const noexcept { return label_values.size(); }
    bool has_relevant_sets() const noexcept { return !relevant_sets.empty(); }

    /// Throws ShapeError/ValueError when fields disagree.
    void validate() const;

    LabeledDataset subset(std::span<const std::size_t> rows) const;
    std::vector<std::size_t> class_counts() const;
};

/// Reads a label-first delimited file (tab, comma or blank separated; detected
/// from the first line). Distinct labels are mapped to 0..C-1 in ascending
/// order of their numeric value.
LabeledDataset load_ucr(const std::filesystem::path& path);

/// Writes the label-first format with full double precision.
void write_ucr(const LabeledDataset& data, const std::filesystem::path& path, char delimiter = ',');

/// "<stem>.relevant.csv" next to the data file.
std::filesystem::path relevant_sidecar_path(const std::filesystem::path& data_path);

/// One line per sample: the relevant time indices, comma separated.
std::vector<std::vector<std::size_t>> load_relevant_sets(const std::filesystem::path& path);
void write_relevant_sets(std::span<const std::vector<std::size_t>> sets, const std::filesystem::path& path);

/// load_ucr plus the sidecar, when one exists.
LabeledDataset load_dataset(const std::filesystem::path& path);
/// write_ucr plus the sidecar, when the dataset carries relevant sets.
void write_dataset(const LabeledDataset& data, const std::filesystem::path& path);

/// Per-sample z-normalization; constant series become all zeros.
void z_normalize(LabeledDataset& data);

/// FNV-1a over shape, labels and series bytes.
std::uint64_t fingerprint(const LabeledDataset& data);

/// Re-expresses class indices against another mapping (e.g. the training
/// split's). Throws ValueError when a label is missing from `label_values`.
void remap_labels(LabeledDataset& data, std::span<const double> label_values);

/// Rows of `a` then `b`; labels are remapped onto the union of both mappings.
LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b);

/// Class-stratified random split of `pooled`, e.g. 0.8 for an 80/20 split.
std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& pooled, double train_fraction,
                                                           std::uint64_t seed);

}  // namespace tsxai
