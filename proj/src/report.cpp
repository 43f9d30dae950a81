#include "tsxai/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "text.hpp"
#include "tsxai/errors.hpp"

namespace tsxai {

namespace {

constexpr const char* kRelevanceHeader = "sample_id,class_id,t,raw,clamped,scaled";
constexpr const char* kMetricsHeader = "dataset,model_kind,metric,k,mean,std,p_value";

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
    return in;
}

void expect_header(std::istream& in, const char* header, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != header) {
        throw ParseError("'" + path.string() + "' does not start with header '" + header + "'", 1);
    }
}

std::size_t index_cell(std::string_view cell, std::size_t line) {
    const auto v = text::parse_index(cell);
    if (!v) throw ParseError("expected a non-negative integer, got '" + std::string(cell) + "'", line);
    return *v;
}

double number_cell(std::string_view cell, std::size_t line) {
    const auto v = text::parse_double(cell);
    if (!v) throw ParseError("expected a number, got '" + std::string(cell) + "'", line);
    return *v;
}

}  // namespace

void write_relevance_csv(std::span<const RelevanceMap> maps, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << kRelevanceHeader << '\n';
    for (const auto& m : maps) {
        if (m.clamped.size() != m.raw.size() || m.scaled.size() != m.raw.size()) {
            throw ShapeError("relevance map stages differ in length");
        }
        for (std::size_t t = 0; t < m.raw.size(); ++t) {
            out << m.sample_id << ',' << m.class_id << ',' << t << ',' << text::format_double(m.raw[t]) << ','
                << text::format_double(m.clamped[t]) << ',' << text::format_double(m.scaled[t]) << '\n';
        }
    }
}

std::vector<RelevanceMap> read_relevance_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_header(in, kRelevanceHeader, path);
    std::vector<RelevanceMap> maps;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cells = text::split(text::trim(line), ',');
        if (cells.size() != 6) throw ParseError("expected 6 columns", line_no);
        const std::size_t sample = index_cell(cells[0], line_no);
        const std::size_t cls = index_cell(cells[1], line_no);
        const std::size_t t = index_cell(cells[2], line_no);
        if (t == 0) {
            maps.push_back(RelevanceMap{sample, cls, {}, {}, {}});
        } else if (maps.empty() || maps.back().sample_id != sample || maps.back().class_id != cls ||
                   maps.back().raw.size() != t) {
            throw ParseError("time steps out of order", line_no);
        }
        maps.back().raw.push_back(number_cell(cells[3], line_no));
        maps.back().clamped.push_back(number_cell(cells[4], line_no));
        maps.back().scaled.push_back(number_cell(cells[5], line_no));
    }
    return maps;
}

void write_ensemble_relevance_csv(std::size_t sample_id, const EnsembleRelevance& r,
                                  const std::filesystem::path& path) {
    if (r.sigma.size() != r.mu.size() || r.filtered.size() != r.mu.size()) {
        throw ShapeError("ensemble relevance vectors differ in length");
    }
    auto out = open_out(path);
    out << "sample_id,class_id,t,mu,sigma,epsilon,filtered\n";
    const std::string eps = text::format_double(r.epsilon);
    for (std::size_t t = 0; t < r.mu.size(); ++t) {
        out << sample_id << ',' << r.class_id << ',' << t << ',' << text::format_double(r.mu[t]) << ','
            << text::format_double(r.sigma[t]) << ',' << eps << ',' << text::format_double(r.filtered[t]) << '\n';
    }
}

void write_metrics_csv(std::span<const MetricRow> rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        out << text::csv_field(r.dataset) << ',' << text::csv_field(r.model_kind) << ',' << text::csv_field(r.metric)
            << ',' << (r.k ? std::to_string(*r.k) : "") << ',' << text::format_double(r.mean) << ','
            << text::format_double(r.std) << ',' << (r.p_value ? text::format_double(*r.p_value) : "") << '\n';
    }
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_header(in, kMetricsHeader, path);
    std::vector<MetricRow> rows;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto cells = text::split_csv(line);
        if (cells.size() != 7) throw ParseError("expected 7 columns", line_no);
        MetricRow r;
        r.dataset = cells[0];
        r.model_kind = cells[1];
        r.metric = cells[2];
        if (!cells[3].empty()) r.k = index_cell(cells[3], line_no);
        r.mean = number_cell(cells[4], line_no);
        r.std = number_cell(cells[5], line_no);
        if (!cells[6].empty()) r.p_value = number_cell(cells[6], line_no);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct Rgb {
    int r, g, b;
};

constexpr Rgb kBaseline{200, 200, 200};
constexpr double kWidth = 960.0;
constexpr double kPanelHeight = 200.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kGap = 50.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string color(double v, Rgb strong) {
    v = std::clamp(v, 0.0, 1.0);
    auto mix = [v](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * v)); };
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(kBaseline.r, strong.r), mix(kBaseline.g, strong.g),
                  mix(kBaseline.b, strong.b));
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void panel(std::string& svg, const char* id, const char* label, std::size_t index, std::span<const double> series,
           std::span<const double> values, Rgb strong) {
    const double top = kTop + static_cast<double>(index) * (kPanelHeight + kGap);
    const double plot_w = kWidth - kLeft - kRight;
    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    const double lo = *lo_it;
    const double span_y = *hi_it > lo ? *hi_it - lo : 1.0;
    const double max_v = *std::max_element(values.begin(), values.end());
    const double norm = max_v > 0.0 ? max_v : 1.0;
    const std::size_t n = series.size();
    auto x_of = [&](std::size_t t) {
        return kLeft + (n > 1 ? plot_w * static_cast<double>(t) / static_cast<double>(n - 1) : plot_w / 2.0);
    };
    auto y_of = [&](double v) { return top + kPanelHeight - kPanelHeight * (v - lo) / span_y; };

    svg += "<g class=\"panel\" id=\"" + std::string(id) + "\">\n";
    svg += "<text x=\"" + num(kLeft) + "\" y=\"" + num(top - 10.0) + "\" font-family=\"sans-serif\" font-size=\"14\">" +
           label + " (max " + num(max_v) + ")</text>\n";
    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(top) + "\" width=\"" + num(plot_w) + "\" height=\"" +
           num(kPanelHeight) + "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg += "<polyline fill=\"none\" stroke=\"#555555\" stroke-width=\"1\" points=\"";
    for (std::size_t t = 0; t < n; ++t) svg += (t ? " " : "") + num(x_of(t)) + "," + num(y_of(series[t]));
    svg += "\"/>\n";
    for (std::size_t t = 0; t < n; ++t) {
        svg += "<circle cx=\"" + num(x_of(t)) + "\" cy=\"" + num(y_of(series[t])) + "\" r=\"3\" fill=\"" +
               color(values[t] / norm, strong) + "\"/>\n";
    }
    svg += "</g>\n";
}

}  // namespace

std::string relevance_svg(std::span<const double> series, const EnsembleRelevance& r, const std::string& title) {
    const std::size_t n = series.size();
    if (n == 0) throw ShapeError("relevance_svg: empty series");
    if (r.mu.size() != n || r.sigma.size() != n || r.filtered.size() != n) {
        throw ShapeError("relevance_svg: series has " + std::to_string(n) + " steps, relevance maps have " +
                         std::to_string(r.mu.size()) + "/" + std::to_string(r.sigma.size()) + "/" +
                         std::to_string(r.filtered.size()));
    }
    const double height = kTop + 3.0 * kPanelHeight + 2.0 * kGap + 30.0;
    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    svg += "<title>" + escape(title.empty() ? "relevance" : title) + "</title>\n";
    panel(svg, "panel-mean", "mean relevance", 0, series, r.mu, {0, 104, 55});
    panel(svg, "panel-std", "standard deviation", 1, series, r.sigma, {215, 48, 39});
    panel(svg, "panel-filtered", "uncertainty-filtered relevance", 2, series, r.filtered, {0, 104, 55});
    svg += "</svg>\n";
    return svg;
}

void render_relevance_svg(std::span<const double> series, const EnsembleRelevance& relevance,
                          const std::filesystem::path& path, const std::string& title) {
    const std::string svg = relevance_svg(series, relevance, title);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << svg;
}

std::string relevance_ratio_svg(std::span<const double> single, std::span<const double> ensemble, double baseline,
                                std::size_t k) {
    if (single.size() != ensemble.size() || single.empty()) {
        throw ShapeError("relevance_ratio_svg: single and ensemble ratios must be non-empty and equal length");
    }
    const double width = 640.0;
    const double height = 360.0;
    const double left = 60.0;
    const double bottom = 310.0;
    const double plot_h = 250.0;
    const double group_w = (width - left - 20.0) / static_cast<double>(single.size());
    const double bar_w = group_w * 0.35;
    auto y_of = [&](double v) { return bottom - plot_h * std::clamp(v, 0.0, 1.0); };

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"" + num(left) + "\" y=\"30.00\" font-family=\"sans-serif\" font-size=\"14\">relevance ratio, k=" +
           std::to_string(k) + "</text>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(width - 20.0) + "\" y2=\"" +
           num(bottom) + "\" stroke=\"#444444\"/>\n";
    for (std::size_t j = 0; j < single.size(); ++j) {
        const double x = left + group_w * static_cast<double>(j) + group_w * 0.15;
        svg += "<g class=\"bars\" id=\"position-" + std::to_string(j) + "\">\n";
        svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y_of(single[j])) + "\" width=\"" + num(bar_w) +
               "\" height=\"" + num(bottom - y_of(single[j])) + "\" fill=\"#7570b3\"/>\n";
        svg += "<rect x=\"" + num(x + bar_w) + "\" y=\"" + num(y_of(ensemble[j])) + "\" width=\"" + num(bar_w) +
               "\" height=\"" + num(bottom - y_of(ensemble[j])) + "\" fill=\"#1b9e77\"/>\n";
        svg += "<text x=\"" + num(x + bar_w) + "\" y=\"" + num(bottom + 16.0) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + std::to_string(j + 1) +
               "</text>\n";
        svg += "</g>\n";
    }
    svg += "<line class=\"baseline\" x1=\"" + num(left) + "\" y1=\"" + num(y_of(baseline)) + "\" x2=\"" +
           num(width - 20.0) + "\" y2=\"" + num(y_of(baseline)) +
           "\" stroke=\"#d95f02\" stroke-dasharray=\"6,4\"/>\n";
    svg += "<text x=\"" + num(width - 170.0) + "\" y=\"30.00\" font-family=\"sans-serif\" font-size=\"11\">"
           "single (purple), ensemble (green)</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace tsxai
