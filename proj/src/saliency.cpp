/* Copyright 2026 The SpikeQuant Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "spikequant/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace spikequant {

namespace {

void check_shapes(const Tensor2D& x, const Tensor2D& w) {
    if (w.cols != x.rows) {
        throw std::invalid_argument(
            "activation_saliency: W columns must match X rows (channels)");
    }
}

}  // namespace

Tensor2D activation_saliency(const Tensor2D& x, const Tensor2D& w) {
    check_shapes(x, w);
    const std::size_t channels = x.rows;
    const std::size_t tokens = x.cols;
    const std::size_t out = w.rows;

    // wx = W X (out x tokens)
    Tensor2D wx(out, tokens);
    for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t t = 0; t < tokens; ++t) {
            double acc = 0.0;
            for (std::size_t c = 0; c < channels; ++c) {
                acc += w.at(o, c) * x.at(c, t);
            }
            wx.at(o, t) = acc;
        }
    }
    // grad = W^T wx (channels x tokens), saliency = X o grad
    Tensor2D s(channels, tokens);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t t = 0; t < tokens; ++t) {
            double acc = 0.0;
            for (std::size_t o = 0; o < out; ++o) {
                acc += w.at(o, c) * wx.at(o, t);
            }
            s.at(c, t) = x.at(c, t) * acc;
        }
    }
    return s;
}

HessianMatrix hessian(const Tensor2D& x, double damping_frac) {
    if (x.rows == 0 || x.cols == 0) {
        throw std::invalid_argument("hessian: empty input");
    }
    const std::size_t dim = x.rows;
    HessianMatrix h;
    h.dim = dim;
    h.values.assign(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i; j < dim; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < x.cols; ++t) {
                acc += x.at(i, t) * x.at(j, t);
            }
            h.values[i * dim + j] = 2.0 * acc;
            h.values[j * dim + i] = 2.0 * acc;
        }
    }
    double diag_mean = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        diag_mean += h.values[i * dim + i];
    }
    diag_mean /= static_cast<double>(dim);
    h.damping = damping_frac * diag_mean;
    for (std::size_t i = 0; i < dim; ++i) {
        h.values[i * dim + i] += h.damping;
    }
    return h;
}

bool cholesky_factor(std::vector<double>& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum)) {
                    return false;
                }
                a[i * n + i] = std::sqrt(sum);
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            a[i * n + j] = 0.0;
        }
    }
    return true;
}

std::vector<double> cholesky_inverse(const std::vector<double>& a, std::size_t n) {
    std::vector<double> l = a;
    if (!cholesky_factor(l, n)) {
        throw NumericalError(
            "cholesky_inverse: matrix not positive definite (insufficient damping)");
    }
    // Solve L L^T X = I column by column.
    std::vector<double> inv(n * n, 0.0);
    std::vector<double> y(n), z(n);
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = i == col ? 1.0 : 0.0;
            for (std::size_t k = 0; k < i; ++k) {
                sum -= l[i * n + k] * y[k];
            }
            y[i] = sum / l[i * n + i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double sum = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) {
                sum -= l[k * n + ii] * z[k];
            }
            z[ii] = sum / l[ii * n + ii];
        }
        for (std::size_t i = 0; i < n; ++i) {
            inv[i * n + col] = z[i];
        }
    }
    return inv;
}

Tensor2D weight_saliency(const Tensor2D& w, const HessianMatrix& h) {
    if (h.dim != w.cols) {
        throw std::invalid_argument("weight_saliency: H dim must match W columns");
    }
    const std::vector<double> inv = cholesky_inverse(h.values, h.dim);
    Tensor2D s(w.rows, w.cols);
    for (std::size_t c = 0; c < w.cols; ++c) {
        const double d = inv[c * h.dim + c];
        const double denom = d * d;
        for (std::size_t r = 0; r < w.rows; ++r) {
            s.at(r, c) = w.at(r, c) * w.at(r, c) / denom;
        }
    }
    return s;
}

std::vector<double> aggregate_per_channel(const Tensor2D& s, ChannelAxis axis) {
    const bool rows_are_channels = axis == ChannelAxis::Rows;
    const std::size_t channels = rows_are_channels ? s.rows : s.cols;
    const std::size_t span = rows_are_channels ? s.cols : s.rows;
    std::vector<double> out(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < span; ++i) {
            acc += std::fabs(rows_are_channels ? s.at(c, i) : s.at(i, c));
        }
        out[c] = span ? acc / static_cast<double>(span) : 0.0;
    }
    return out;
}

SaliencyReport select_salient(const std::vector<double>& scores, double ratio) {
    if (ratio < 0.0 || ratio > 1.0) {
        throw std::invalid_argument("select_salient: ratio must lie in [0, 1]");
    }
    const std::size_t n = scores.size();
    SaliencyReport report;
    report.metric = SaliencyMetric::ActivationGradient;
    report.per_channel = scores;
    report.ratio = ratio;
    report.rank.resize(n);
    std::iota(report.rank.begin(), report.rank.end(), std::size_t{0});
    std::stable_sort(report.rank.begin(), report.rank.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (scores[a] != scores[b]) {
                             return scores[a] > scores[b];
                         }
                         return a < b;
                     });
    const auto k = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(n)));
    report.selected.assign(report.rank.begin(),
                           report.rank.begin() + std::min(k, n));
    std::sort(report.selected.begin(), report.selected.end());
    return report;
}

SaliencyReport random_plan(std::size_t channels, double ratio, Rng& rng) {
    if (ratio < 0.0 || ratio > 1.0) {
        throw std::invalid_argument("random_plan: ratio must lie in [0, 1]");
    }
    SaliencyReport report;
    report.metric = SaliencyMetric::Random;
    report.per_channel.assign(channels, 0.0);
    report.ratio = ratio;
    report.rank.resize(channels);
    std::iota(report.rank.begin(), report.rank.end(), std::size_t{0});
    const auto k = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(channels)));
    // Partial Fisher-Yates over the index pool.
    std::vector<std::size_t> pool(channels);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k && i < channels; ++i) {
        const std::size_t j = i + rng.next_below(channels - i);
        std::swap(pool[i], pool[j]);
    }
    report.selected.assign(pool.begin(), pool.begin() + std::min(k, channels));
    std::sort(report.selected.begin(), report.selected.end());
    return report;
}

void write_saliency_csv(const SaliencyReport& report, std::ostream& out) {
    const std::size_t n = report.per_channel.size();
    std::vector<std::size_t> position(n, 0);
    for (std::size_t i = 0; i < report.rank.size(); ++i) {
        position[report.rank[i]] = i;
    }
    std::vector<bool> selected(n, false);
    for (std::size_t c : report.selected) {
        selected[c] = true;
    }
    out << "channel,score,rank,selected\n";
    char buf[64];
    for (std::size_t c = 0; c < n; ++c) {
        std::snprintf(buf, sizeof buf, "%.12g", report.per_channel[c]);
        out << c << ',' << buf << ',' << position[c] << ','
            << (selected[c] ? 1 : 0) << '\n';
    }
}

}  // namespace spikequant
