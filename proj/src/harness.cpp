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
#include "spikequant/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spikequant/kernels.hpp"
#include "spikequant/neuron.hpp"

namespace spikequant {

namespace {

constexpr double kHessianDamping = 0.01;  // 1% of the mean diagonal
constexpr std::size_t kWeightGroup = 128;

double log2d(double v) { return std::log2(v); }

ChannelPlan make_plan(std::size_t channels, int t_prime, int levels,
                      std::vector<std::size_t> selected) {
    ChannelPlan plan;
    plan.channels = channels;
    plan.salient_steps = t_prime;
    plan.base_steps = 1;
    plan.levels = levels;
    plan.salient_set = std::move(selected);
    plan.validate();
    return plan;
}

OpsReport plan_ops(const ChannelPlan& plan, std::uint64_t macs, double bits_w,
                   double bits_a, double other_side_bits) {
    OpsReport ops;
    ops.macs = macs;
    ops.bits_weight = bits_w;
    ops.bits_act = bits_a;
    ops.ace = ace(macs, bits_w, bits_a);
    ops.ace_ratio_vs_fp16 =
        mixed_ace_ratio(plan, log2d(plan.levels), other_side_bits, 16.0);
    ops.equal_steps =
        1.0 + plan.salient_ratio() * (plan.salient_steps - 1);
    return ops;
}

}  // namespace

std::vector<std::size_t> synth_outlier_channels(const SyntheticSpec& spec) {
    Rng rng(spec.seed);
    return random_plan(spec.channels, spec.outlier_ratio, rng).selected;
}

Tensor2D synth_activations(const SyntheticSpec& spec) {
    if (spec.outlier_ratio < 0.0 || spec.outlier_ratio > 1.0 ||
        spec.outlier_scale < 1.0) {
        throw std::invalid_argument("synth_activations: invalid spec");
    }
    Rng rng(spec.seed);
    const auto outliers = random_plan(spec.channels, spec.outlier_ratio, rng).selected;
    Tensor2D x = rng_normal(rng, spec.tokens, spec.channels, 0.0, 1.0);
    for (std::size_t c : outliers) {
        for (std::size_t t = 0; t < spec.tokens; ++t) {
            x.at(t, c) *= spec.outlier_scale;
        }
    }
    return x;
}

Tensor2D synth_weights(const SyntheticSpec& spec, std::size_t out_rows) {
    // Decorrelated stream; the column structure reuses the activation
    // outlier set so saliency has something real to find.
    Rng rng(spec.seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
    const auto outliers = synth_outlier_channels(spec);
    Tensor2D w = rng_normal(rng, out_rows, spec.channels, 0.0, 1.0);
    for (std::size_t c : outliers) {
        for (std::size_t r = 0; r < out_rows; ++r) {
            w.at(r, c) *= spec.outlier_scale;
        }
    }
    return w;
}

double layerwise_error(const Tensor2D& w, const Tensor2D& x, const Tensor2D& wq,
                       const Tensor2D& xq) {
    const Tensor2D y = reference_gemm(w, x);
    const Tensor2D yq = reference_gemm(wq, xq);
    if (y.rows != yq.rows || y.cols != yq.cols) {
        throw std::invalid_argument("layerwise_error: shape mismatch");
    }
    double err = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y.data[i] - yq.data[i];
        err += d * d;
    }
    return err;
}

Tensor2D rtn_quantize_weights(const Tensor2D& w, const ChannelPlan& plan,
                              std::size_t group_size) {
    plan.validate();
    if (plan.channels != w.cols) {
        throw std::invalid_argument("rtn_quantize_weights: plan/shape mismatch");
    }
    const auto mask = plan.salient_mask();
    const long base_levels = plan.levels;
    const long salient_levels =
        static_cast<long>(plan.salient_steps) * (plan.levels - 1) + 1;
    Tensor2D out(w.rows, w.cols);
    const std::size_t ngroups = (w.cols + group_size - 1) / group_size;
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t g = 0; g < ngroups; ++g) {
            const std::size_t c0 = g * group_size;
            const std::size_t c1 = std::min(w.cols, c0 + group_size);
            double lo = w.at(r, c0);
            double hi = lo;
            for (std::size_t c = c0; c < c1; ++c) {
                lo = std::min(lo, w.at(r, c));
                hi = std::max(hi, w.at(r, c));
            }
            const double range = hi - lo;
            for (std::size_t c = c0; c < c1; ++c) {
                const long levels = mask[c] ? salient_levels : base_levels;
                if (range <= 0.0) {
                    out.at(r, c) = lo;
                    continue;
                }
                const double delta = range / static_cast<double>(levels - 1);
                auto code = std::llround((w.at(r, c) - lo) / delta);
                code = std::clamp<long long>(code, 0, levels - 1);
                out.at(r, c) = delta * static_cast<double>(code) + lo;
            }
        }
    }
    return out;
}

Tensor2D gptq_quantize_weights(const Tensor2D& w, const HessianMatrix& h,
                               const ChannelPlan& plan, std::size_t group_size) {
    plan.validate();
    if (plan.channels != w.cols || h.dim != w.cols) {
        throw std::invalid_argument("gptq_quantize_weights: plan/shape mismatch");
    }
    const auto mask = plan.salient_mask();
    const long base_levels = plan.levels;
    const long salient_levels =
        static_cast<long>(plan.salient_steps) * (plan.levels - 1) + 1;
    const std::size_t n = w.cols;

    // Lower Cholesky factor of H^-1; row c of its transpose drives the
    // error compensation for column c (remaining columns only).
    std::vector<double> hinv = cholesky_inverse(h.values, n);
    if (!cholesky_factor(hinv, n)) {
        throw NumericalError("gptq_quantize_weights: inverse Hessian not PD");
    }

    Tensor2D work = w;
    Tensor2D out(w.rows, w.cols);
    std::vector<double> lo(w.rows), delta_row(w.rows);
    std::vector<double> err(w.rows);
    std::vector<double> hi(w.rows);
    for (std::size_t c = 0; c < n; ++c) {
        if (c % group_size == 0) {
            // Group scales come from the running compensated weights.
            const std::size_t c1 = std::min(n, c + group_size);
            for (std::size_t r = 0; r < w.rows; ++r) {
                double gl = work.at(r, c);
                double gh = gl;
                for (std::size_t k = c; k < c1; ++k) {
                    gl = std::min(gl, work.at(r, k));
                    gh = std::max(gh, work.at(r, k));
                }
                lo[r] = gl;
                hi[r] = gh;
            }
        }
        const long levels = mask[c] ? salient_levels : base_levels;
        const double d = hinv[c * n + c];
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double range = hi[r] - lo[r];
            double q = lo[r];
            if (range > 0.0) {
                const double delta = range / static_cast<double>(levels - 1);
                auto code = std::llround((work.at(r, c) - lo[r]) / delta);
                code = std::clamp<long long>(code, 0, levels - 1);
                q = delta * static_cast<double>(code) + lo[r];
            }
            out.at(r, c) = q;
            err[r] = (work.at(r, c) - q) / d;
        }
        for (std::size_t k = c + 1; k < n; ++k) {
            const double u = hinv[k * n + c];
            if (u == 0.0) {
                continue;
            }
            for (std::size_t r = 0; r < w.rows; ++r) {
                work.at(r, k) -= err[r] * u;
            }
        }
    }
    return out;
}

PipelineResult run_activation_pipeline(const Tensor2D& w, const Tensor2D& x,
                                       double ratio, int t_prime, int levels,
                                       Selector selector, std::uint64_t seed) {
    if (w.cols != x.cols) {
        throw std::invalid_argument(
            "run_activation_pipeline: weight/activation channel mismatch");
    }
    SaliencyReport rep;
    if (selector == Selector::ObSpiking) {
        const Tensor2D s = activation_saliency(x.transposed(), w);
        rep = select_salient(aggregate_per_channel(s, ChannelAxis::Rows), ratio);
    } else {
        Rng rng(seed);
        rep = random_plan(x.cols, ratio, rng);
    }

    PipelineResult result;
    result.plan = make_plan(x.cols, t_prime, levels, rep.selected);
    result.saliency = rep;

    const SpikeTrain train = mixed_step_quantize(x, result.plan);
    const Tensor2D xq = mixed_step_dequantize(train, result.plan);

    ChannelPlan wplan = make_plan(w.cols, 1, levels, {});
    const Tensor2D wq = rtn_quantize_weights(w, wplan, kWeightGroup);

    result.layerwise_error =
        layerwise_error(w, x.transposed(), wq, xq.transposed());

    const double bits = log2d(levels);
    const double bits_act =
        bits * (1.0 + result.plan.salient_ratio() * (t_prime - 1));
    const auto macs = static_cast<std::uint64_t>(w.rows) * w.cols * x.rows;
    result.ops = plan_ops(result.plan, macs, bits, bits_act, bits);
    const SpikeTrain expanded = expand_train(train);
    result.ops.sparsity = train_sparsity(expanded);
    result.ops.sparse_ace = sparse_ace(expanded, bits, w.rows);
    result.ops.code_bits_total =
        static_cast<double>(x.rows) * static_cast<double>(x.cols) * bits_act;
    return result;
}

PipelineResult run_weight_pipeline(const Tensor2D& w, const Tensor2D& x_calib,
                                   double ratio, int t_prime, int levels,
                                   Selector selector, WeightMethod method,
                                   std::uint64_t seed) {
    if (w.cols != x_calib.cols) {
        throw std::invalid_argument(
            "run_weight_pipeline: weight/calibration channel mismatch");
    }
    const Tensor2D x_ct = x_calib.transposed();
    const HessianMatrix h = hessian(x_ct, kHessianDamping);

    SaliencyReport rep;
    if (selector == Selector::ObSpiking) {
        const Tensor2D s = weight_saliency(w, h);
        rep = select_salient(aggregate_per_channel(s, ChannelAxis::Cols), ratio);
        rep.metric = SaliencyMetric::WeightHessian;
    } else {
        Rng rng(seed);
        rep = random_plan(w.cols, ratio, rng);
    }

    PipelineResult result;
    result.plan = make_plan(w.cols, t_prime, levels, rep.selected);
    result.saliency = rep;

    const Tensor2D wq =
        method == WeightMethod::Rtn
            ? rtn_quantize_weights(w, result.plan, kWeightGroup)
            : gptq_quantize_weights(w, h, result.plan, kWeightGroup);
    result.layerwise_error = layerwise_error(w, x_ct, wq, x_ct);

    const double bits = log2d(levels);
    const double bits_w =
        bits * (1.0 + result.plan.salient_ratio() * (t_prime - 1));
    const auto macs = static_cast<std::uint64_t>(w.rows) * w.cols * x_calib.rows;
    result.ops = plan_ops(result.plan, macs, bits_w, 16.0, 16.0);
    result.ops.code_bits_total =
        static_cast<double>(w.rows) * static_cast<double>(w.cols) * bits_w;
    return result;
}

PipelineResult run_ternary_pipeline(const Tensor2D& w, const Tensor2D& x_calib,
                                    const std::array<double, 3>& mix) {
    if (w.cols != x_calib.cols) {
        throw std::invalid_argument(
            "run_ternary_pipeline: weight/calibration channel mismatch");
    }
    const std::array<int, 3> step_kinds = {1, 2, 4};
    const double equal =
        equal_steps(std::span<const double>(mix.data(), 3),
                    std::span<const int>(step_kinds.data(), 3));

    const Tensor2D x_ct = x_calib.transposed();
    const HessianMatrix h = hessian(x_ct, kHessianDamping);
    const Tensor2D s = weight_saliency(w, h);

    // Elementwise rank: most salient get 4 steps, the next tier 2, rest 1.
    const std::size_t total = s.size();
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s.data[a] != s.data[b]) {
            return s.data[a] > s.data[b];
        }
        return a < b;
    });
    auto n4 = static_cast<std::size_t>(
        std::llround(mix[2] * static_cast<double>(total)));
    auto n2 = static_cast<std::size_t>(
        std::llround(mix[1] * static_cast<double>(total)));
    n4 = std::min(n4, total);
    n2 = std::min(n2, total - n4);
    IntMat steps(w.rows, w.cols, 1);
    for (std::size_t i = 0; i < n4; ++i) {
        steps.data[order[i]] = 4;
    }
    for (std::size_t i = n4; i < n4 + n2; ++i) {
        steps.data[order[i]] = 2;
    }

    // Per-(row, 128-group) absmax scale, per-element step grid.
    SpikeTrain train;
    train.tokens = w.rows;
    train.channels = w.cols;
    train.steps = 4;
    train.form = SpikeForm::ExpandedTernary;
    train.codes.assign(w.rows * w.cols * 4, 0);
    TokenQuantParams nominal;
    nominal.steps = 4;
    nominal.levels_per_step = 3;
    train.params.assign(w.rows, nominal);
    Tensor2D deltas(w.rows, w.cols);
    Tensor2D wq(w.rows, w.cols);
    const std::size_t ngroups = (w.cols + kWeightGroup - 1) / kWeightGroup;
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t g = 0; g < ngroups; ++g) {
            const std::size_t c0 = g * kWeightGroup;
            const std::size_t c1 = std::min(w.cols, c0 + kWeightGroup);
            double absmax = 0.0;
            for (std::size_t c = c0; c < c1; ++c) {
                absmax = std::max(absmax, std::fabs(w.at(r, c)));
            }
            for (std::size_t c = c0; c < c1; ++c) {
                const int t_e = steps.at(r, c);
                const double delta =
                    absmax > 0.0 ? absmax / static_cast<double>(t_e) : 0.0;
                deltas.at(r, c) = delta;
                std::int64_t code = 0;
                if (delta > 0.0) {
                    code = std::llround(w.at(r, c) / delta);
                    code = std::clamp<std::int64_t>(code, -t_e, t_e);
                }
                const std::int32_t sign = code < 0 ? -1 : 1;
                for (std::int64_t i = 0; i < (code < 0 ? -code : code); ++i) {
                    train.code(r, c, static_cast<std::size_t>(i)) = sign;
                }
                wq.at(r, c) = delta * static_cast<double>(code);
            }
        }
    }

    PipelineResult result;
    result.layerwise_error = layerwise_error(w, x_ct, wq, x_ct);
    result.plan.channels = w.cols;
    result.plan.salient_steps = 4;
    result.plan.levels = 3;
    result.plan.granularity = PlanGranularity::Unstructured;
    result.plan.element_steps = steps;
    result.saliency =
        select_salient(aggregate_per_channel(s, ChannelAxis::Cols), mix[1] + mix[2]);
    result.saliency.metric = SaliencyMetric::WeightHessian;

    const auto macs = static_cast<std::uint64_t>(w.rows) * w.cols * x_calib.rows;
    result.ops.macs = macs;
    result.ops.equal_steps = equal;
    result.ops.bits_weight = equal;
    result.ops.bits_act = 16.0;
    result.ops.ace = ace(macs, equal, 16.0);
    result.ops.ace_ratio_vs_fp16 = equal * 16.0 / 256.0;
    result.ops.sparsity = train_sparsity(train);
    result.ops.sparse_ace = sparse_ace(train, 16.0, x_calib.rows);
    result.ops.code_bits_total =
        static_cast<double>(w.rows) * static_cast<double>(w.cols) * equal;
    return result;
}

Tensor2D attention_reference(const Tensor2D& q, const Tensor2D& k,
                             const Tensor2D& v) {
    if (q.cols != k.cols || k.rows != v.rows) {
        throw std::invalid_argument("attention: shape mismatch");
    }
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols));
    Tensor2D scores = reference_gemm(q, k.transposed());
    for (std::size_t r = 0; r < scores.rows; ++r) {
        double m = scores.at(r, 0) * inv_sqrt_d;
        for (std::size_t c = 0; c < scores.cols; ++c) {
            scores.at(r, c) *= inv_sqrt_d;
            m = std::max(m, scores.at(r, c));
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < scores.cols; ++c) {
            scores.at(r, c) = std::exp(scores.at(r, c) - m);
            sum += scores.at(r, c);
        }
        for (std::size_t c = 0; c < scores.cols; ++c) {
            scores.at(r, c) /= sum;
        }
    }
    return reference_gemm(scores, v);
}

Tensor2D attention_demo(const Tensor2D& q, const Tensor2D& k, const Tensor2D& v,
                        double ratio, int t_prime, int levels) {
    if (q.cols != k.cols || k.rows != v.rows) {
        throw std::invalid_argument("attention_demo: shape mismatch");
    }
    // Identity-weight saliency surrogate: per-channel mean square.
    auto cache_plan = [&](const Tensor2D& cache) {
        std::vector<double> scores(cache.cols, 0.0);
        for (std::size_t t = 0; t < cache.rows; ++t) {
            for (std::size_t c = 0; c < cache.cols; ++c) {
                scores[c] += cache.at(t, c) * cache.at(t, c);
            }
        }
        for (double& sc : scores) {
            sc /= static_cast<double>(cache.rows);
        }
        return make_plan(cache.cols, t_prime, levels,
                         select_salient(scores, ratio).selected);
    };
    const ChannelPlan plan_k = cache_plan(k);
    const ChannelPlan plan_v = cache_plan(v);
    const Tensor2D kq = mixed_step_dequantize(mixed_step_quantize(k, plan_k), plan_k);
    const Tensor2D vq = mixed_step_dequantize(mixed_step_quantize(v, plan_v), plan_v);
    return attention_reference(q, kq, vq);
}

}  // namespace spikequant
