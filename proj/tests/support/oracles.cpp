#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace oracle {

namespace {

using LTensor = std::vector<std::vector<std::vector<long double>>>;  // [n][c][t]

LTensor to_long(const Tensor3& x) {
    LTensor out(x.batch(), std::vector<std::vector<long double>>(x.channels(),
                                                                  std::vector<long double>(x.length())));
    for (std::size_t n = 0; n < x.batch(); ++n)
        for (std::size_t c = 0; c < x.channels(); ++c)
            for (std::size_t t = 0; t < x.length(); ++t) out[n][c][t] = x(n, c, t);
    return out;
}

LTensor conv_long(const LTensor& x, const tsxai::ConvLayerParams& p) {
    const std::size_t N = x.size(), T = x[0][0].size();
    const long pad = static_cast<long>(p.kernel_size / 2);
    LTensor y(N, std::vector<std::vector<long double>>(p.out_channels, std::vector<long double>(T)));
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < p.out_channels; ++o)
            for (std::size_t t = 0; t < T; ++t) {
                long double acc = p.bias[o];
                for (std::size_t i = 0; i < p.in_channels; ++i)
                    for (std::size_t j = 0; j < p.kernel_size; ++j) {
                        const long src = static_cast<long>(t) + static_cast<long>(j) - pad;
                        if (src < 0 || src >= static_cast<long>(T)) continue;
                        acc += static_cast<long double>(p.weight(o, i, j)) * x[n][i][static_cast<std::size_t>(src)];
                    }
                y[n][o][t] = acc;
            }
    return y;
}

void batchnorm_relu(LTensor& x, const tsxai::BatchNormParams& p, bool train_mode) {
    const std::size_t N = x.size(), C = x[0].size(), T = x[0][0].size();
    for (std::size_t c = 0; c < C; ++c) {
        long double mean = p.running_mean[c];
        long double var = p.running_var[c];
        if (train_mode) {
            long double sum = 0;
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t t = 0; t < T; ++t) sum += x[n][c][t];
            mean = sum / static_cast<long double>(N * T);
            long double sq = 0;
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t t = 0; t < T; ++t) sq += (x[n][c][t] - mean) * (x[n][c][t] - mean);
            var = sq / static_cast<long double>(N * T);
        }
        const long double inv = 1.0L / std::sqrt(var + static_cast<long double>(p.eps));
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t t = 0; t < T; ++t) {
                const long double v = p.gamma[c] * (x[n][c][t] - mean) * inv + p.beta[c];
                x[n][c][t] = v > 0 ? v : 0;
            }
    }
}

std::vector<std::vector<long double>> logits_long(const tsxai::FcnParams& params, const Tensor3& batch,
                                                  bool train_mode) {
    LTensor x = to_long(batch);
    for (const auto& block : params.blocks) {
        x = conv_long(x, block.conv);
        batchnorm_relu(x, block.bn, train_mode);
    }
    const auto& head = params.head;
    std::vector<std::vector<long double>> logits(x.size(), std::vector<long double>(head.num_classes));
    for (std::size_t n = 0; n < x.size(); ++n)
        for (std::size_t c = 0; c < head.num_classes; ++c) {
            long double acc = head.bias[c];
            for (std::size_t k = 0; k < head.features; ++k) {
                long double pooled = 0;
                for (long double v : x[n][k]) pooled += v;
                pooled /= static_cast<long double>(x[n][k].size());
                acc += static_cast<long double>(head.weight(c, k)) * pooled;
            }
            logits[n][c] = acc;
        }
    return logits;
}

}  // namespace

Tensor3 conv1d(const Tensor3& input, const tsxai::ConvLayerParams& params) {
    const LTensor y = conv_long(to_long(input), params);
    Tensor3 out(input.batch(), params.out_channels, input.length());
    for (std::size_t n = 0; n < out.batch(); ++n)
        for (std::size_t c = 0; c < out.channels(); ++c)
            for (std::size_t t = 0; t < out.length(); ++t) out(n, c, t) = static_cast<double>(y[n][c][t]);
    return out;
}

long double fcn_loss(const tsxai::FcnParams& params, const Tensor3& batch, std::span<const int> labels,
                     bool train_mode) {
    const auto logits = logits_long(params, batch, train_mode);
    long double total = 0;
    for (std::size_t n = 0; n < logits.size(); ++n) {
        const long double mx = *std::max_element(logits[n].begin(), logits[n].end());
        long double z = 0;
        for (long double v : logits[n]) z += std::exp(v - mx);
        total += -(logits[n][static_cast<std::size_t>(labels[n])] - mx - std::log(z));
    }
    return total / static_cast<long double>(logits.size());
}

std::vector<std::vector<long double>> fcn_logits(const tsxai::FcnParams& params, const Tensor3& batch) {
    return logits_long(params, batch, false);
}

GradCheck check_gradients(const tsxai::FcnParams& params, const Tensor3& batch, std::span<const int> labels,
                          double h, double floor) {
    tsxai::FcnParams work = params;
    const auto analytic = tsxai::fcn_loss_and_grads(work, batch, labels, tsxai::Mode::train).grads;
    const auto grads = analytic.tensors();

    tsxai::FcnParams probe = params;
    auto tensors = probe.learnable();
    GradCheck report;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        for (std::size_t j = 0; j < tensors[i].size(); ++j) {
            const double original = tensors[i][j];
            tensors[i][j] = original + h;
            const long double up = fcn_loss(probe, batch, labels, true);
            tensors[i][j] = original - h;
            const long double down = fcn_loss(probe, batch, labels, true);
            tensors[i][j] = original;
            const double numeric = static_cast<double>((up - down) / (2.0L * h));
            const double a = grads[i][j];
            const double scale = std::max({std::abs(a), std::abs(numeric), floor});
            const double err = std::abs(a - numeric) / scale;
            ++report.checked;
            if (err > report.max_relative_error) {
                report.max_relative_error = err;
                std::ostringstream os;
                os << "tensor " << i << ", element " << j << ": analytic " << a << " vs numeric " << numeric;
                report.worst = os.str();
            }
        }
    }
    return report;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t t = 0; t < scores.size(); ++t) keyed.emplace_back(-scores[t], t);
    std::stable_sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(keyed[i].second);
    return out;
}

double relevance_accuracy(std::span<const std::size_t> top, std::span<const std::size_t> relevant) {
    std::size_t hits = 0;
    for (std::size_t y : relevant)
        for (std::size_t r : top)
            if (r == y) {
                ++hits;
                break;
            }
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double relevance_consistency(const std::vector<std::vector<std::size_t>>& sets, std::size_t k) {
    // accumulated as an exact integer ratio so the result is the correctly
    // rounded value of the mean
    std::size_t shared_total = 0;
    std::size_t pairs = 0;
    for (std::size_t m = 0; m < sets.size(); ++m)
        for (std::size_t n = m + 1; n < sets.size(); ++n) {
            const std::set<std::size_t> a(sets[m].begin(), sets[m].end());
            for (std::size_t v : sets[n]) shared_total += a.count(v);
            ++pairs;
        }
    return static_cast<double>(shared_total) / static_cast<double>(pairs * k);
}

std::vector<double> relevance_ratio(const std::vector<std::vector<std::size_t>>& relevant,
                                    const std::vector<std::vector<std::size_t>>& tops) {
    std::vector<double> ratio(relevant.front().size(), 0.0);
    for (std::size_t j = 0; j < ratio.size(); ++j) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < relevant.size(); ++i)
            hits += std::count(tops[i].begin(), tops[i].end(), relevant[i][j]) > 0 ? 1 : 0;
        ratio[j] = static_cast<double>(hits) / static_cast<double>(relevant.size());
    }
    return ratio;
}

ExactPermutation exact_permutation(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size(), na = a.size(), nb = b.size();
    auto stat = [&](std::uint32_t mask) {
        long double sa = 0, sb = 0;
        for (std::size_t i = 0; i < n; ++i) (mask >> i & 1u ? sa : sb) += pooled[i];
        return sa / static_cast<long double>(na) - sb / static_cast<long double>(nb);
    };
    const long double observed = stat((1u << na) - 1u);
    const long double bound = std::abs(observed) * (1.0L - 1e-15L) - 1e-15L;
    ExactPermutation r;
    r.observed = static_cast<double>(observed);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
        ++r.total;
        if (std::abs(stat(mask)) >= bound) ++r.extreme;
    }
    r.p_value = static_cast<double>(r.extreme) / static_cast<double>(r.total);
    return r;
}

}  // namespace oracle
