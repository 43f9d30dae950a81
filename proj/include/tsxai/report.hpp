#pragma once

// CSV exports of relevance maps and evaluation results, and SVG relevance figures.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsxai/cam.hpp"
#include "tsxai/ensemble.hpp"

namespace tsxai {

/// Columns: sample_id,class_id,t,raw,clamped,scaled (one row per time step).
void write_relevance_csv(std::span<const RelevanceMap> maps, const std::filesystem::path& path);
std::vector<RelevanceMap> read_relevance_csv(const std::filesystem::path& path);

/// Columns: sample_id,class_id,t,mu,sigma,epsilon,filtered.
void write_ensemble_relevance_csv(std::size_t sample_id, const EnsembleRelevance& relevance,
                                  const std::filesystem::path& path);

struct MetricRow {
    std::string dataset;
    std::string model_kind;
    std::string metric;
    std::optional<std::size_t> k;
    double mean = 0.0;
    double std = 0.0;
    std::optional<double> p_value;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Columns: dataset,model_kind,metric,k,mean,std,p_value; absent k / p_value are empty cells.
void write_metrics_csv(std::span<const MetricRow> rows, const std::filesystem::path& path);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

/// Three stacked panels drawing `series` with each point colored by the mean
/// relevance, the standard deviation and the uncertainty-filtered relevance.
/// Output bytes depend only on the inputs.
std::string relevance_svg(std::span<const double> series, const EnsembleRelevance& relevance,
                          const std::string& title = {});
void render_relevance_svg(std::span<const double> series, const EnsembleRelevance& relevance,
                          const std::filesystem::path& path, const std::string& title = {});

/// Grouped bars of single-model vs ensemble relevance ratios per relevant
/// position, with the k/T random baseline as a dashed line.
std::string relevance_ratio_svg(std::span<const double> single, std::span<const double> ensemble, double baseline,
                                std::size_t k);

}  // namespace tsxai
