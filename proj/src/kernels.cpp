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
#include "spikequant/kernels.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spikequant {

BitPlanes pack_bitplanes(const IntMat& codes, int bits) {
    if (bits < 1 || bits > 8) {
        throw std::invalid_argument("pack_bitplanes: bits must be in [1, 8]");
    }
    const std::int32_t max_code = static_cast<std::int32_t>((1 << bits) - 1);
    BitPlanes bp;
    bp.rows = codes.rows;
    bp.cols = codes.cols;
    bp.bits = bits;
    bp.words_per_row = (codes.cols + 63) / 64;
    bp.words.assign(static_cast<std::size_t>(bits) * codes.rows * bp.words_per_row, 0);
    for (std::size_t r = 0; r < codes.rows; ++r) {
        for (std::size_t c = 0; c < codes.cols; ++c) {
            const std::int32_t v = codes.at(r, c);
            if (v < 0 || v > max_code) {
                throw std::out_of_range("pack_bitplanes: code out of range");
            }
            for (int b = 0; b < bits; ++b) {
                if (v & (1 << b)) {
                    bp.plane_row(b, r)[c / 64] |= 1ULL << (c % 64);
                }
            }
        }
    }
    return bp;
}

IntMat unpack_bitplanes(const BitPlanes& bp) {
    IntMat codes(bp.rows, bp.cols);
    for (std::size_t r = 0; r < bp.rows; ++r) {
        for (std::size_t c = 0; c < bp.cols; ++c) {
            std::int32_t v = 0;
            for (int b = 0; b < bp.bits; ++b) {
                if (bp.plane_row(b, r)[c / 64] >> (c % 64) & 1ULL) {
                    v |= 1 << b;
                }
            }
            codes.at(r, c) = v;
        }
    }
    return codes;
}

GemmResult bitserial_gemm(const BitPlanes& a, const BitPlanes& w) {
    if (a.cols != w.cols) {
        throw std::invalid_argument("bitserial_gemm: inner dimensions mismatch");
    }
    GemmResult res;
    res.rows = a.rows;
    res.cols = w.rows;
    res.ints.assign(a.rows * w.rows, 0);
    const std::size_t nwords = a.words_per_row;
    for (std::size_t t = 0; t < a.rows; ++t) {
        for (std::size_t o = 0; o < w.rows; ++o) {
            std::int64_t acc = 0;
            for (int i = 0; i < a.bits; ++i) {
                const std::uint64_t* ap = a.plane_row(i, t);
                for (int j = 0; j < w.bits; ++j) {
                    const std::uint64_t* wp = w.plane_row(j, o);
                    std::int64_t pc = 0;
                    for (std::size_t k = 0; k < nwords; ++k) {
                        pc += std::popcount(ap[k] & wp[k]);
                    }
                    acc += pc << (i + j);
                }
            }
            res.ints[t * res.cols + o] = acc;
        }
    }
    res.accumulated_events =
        static_cast<std::uint64_t>(a.rows) * w.rows * a.cols;
    return res;
}

namespace {

int code_bits(long levels) {
    int bits = 1;
    while ((1L << bits) < levels) {
        ++bits;
    }
    return bits;
}

// Integer partials for one (group, class): P[t][o] = sum over the class's
// channels in the group and their steps of x_code * w_code. Both backends
// produce identical integers; the double combination below is shared.
std::vector<std::int64_t> class_group_partial(
    const SpikeTrain& x, const QuantizedTensor& wq,
    const std::vector<std::size_t>& cols, std::size_t steps,
    MixedGemmBackend backend) {
    const std::size_t tokens = x.tokens;
    const std::size_t out = wq.rows;
    std::vector<std::int64_t> p(tokens * out, 0);
    if (cols.empty()) {
        return p;
    }
    if (backend == MixedGemmBackend::Naive) {
        for (std::size_t t = 0; t < tokens; ++t) {
            for (std::size_t o = 0; o < out; ++o) {
                std::int64_t acc = 0;
                for (std::size_t c : cols) {
                    std::int64_t n = 0;
                    for (std::size_t s = 0; s < steps; ++s) {
                        n += x.code(t, c, s);
                    }
                    acc += n * wq.codes.at(o, c);
                }
                p[t * out + o] = acc;
            }
        }
        return p;
    }

    // Bit-serial: expanded layout, one column per (channel, step); signed
    // weight codes are lifted by m = 2^(b-1) - 1 and corrected afterwards.
    const std::size_t expanded = cols.size() * steps;
    const int xbits = code_bits(static_cast<long>(x.params.empty()
                                                      ? 2
                                                      : x.params.front().levels_per_step));
    IntMat a_codes(tokens, expanded);
    std::vector<std::int64_t> a_rowsum(tokens, 0);
    for (std::size_t t = 0; t < tokens; ++t) {
        std::size_t e = 0;
        for (std::size_t c : cols) {
            for (std::size_t s = 0; s < steps; ++s, ++e) {
                const std::int32_t v = x.code(t, c, s);
                a_codes.at(t, e) = v;
                a_rowsum[t] += v;
            }
        }
    }
    const std::int64_t lift = (1L << (wq.bits - 1)) - 1;
    IntMat w_codes(out, expanded);
    for (std::size_t o = 0; o < out; ++o) {
        std::size_t e = 0;
        for (std::size_t c : cols) {
            const std::int32_t lifted =
                wq.codes.at(o, c) + static_cast<std::int32_t>(lift);
            for (std::size_t s = 0; s < steps; ++s, ++e) {
                w_codes.at(o, e) = lifted;
            }
        }
    }
    const BitPlanes ap = pack_bitplanes(a_codes, xbits);
    const BitPlanes wp = pack_bitplanes(w_codes, wq.bits);
    const GemmResult lifted = bitserial_gemm(ap, wp);
    for (std::size_t t = 0; t < tokens; ++t) {
        for (std::size_t o = 0; o < out; ++o) {
            p[t * out + o] = lifted.ints[t * out + o] - lift * a_rowsum[t];
        }
    }
    return p;
}

}  // namespace

Tensor2D mixed_step_gemm(const SpikeTrain& x, const QuantizedTensor& wq,
                         const ChannelPlan& plan, MixedGemmBackend backend) {
    plan.validate();
    if (x.form != SpikeForm::Merged) {
        throw std::invalid_argument("mixed_step_gemm: train must be merged");
    }
    if (!wq.symmetric || wq.granularity != QuantGranularity::PerGroup) {
        throw std::invalid_argument(
            "mixed_step_gemm: weights must be symmetric per-group codes");
    }
    if (wq.cols != x.channels || plan.channels != x.channels ||
        x.steps != static_cast<std::size_t>(plan.salient_steps)) {
        throw std::invalid_argument("mixed_step_gemm: inconsistent plan");
    }

    const std::size_t tokens = x.tokens;
    const std::size_t out = wq.rows;
    const std::size_t ngroups = wq.num_groups();
    const auto mask = plan.salient_mask();

    Tensor2D y(tokens, out, 0.0);
    for (std::size_t g = 0; g < ngroups; ++g) {
        const std::size_t c0 = g * wq.group_size;
        const std::size_t c1 = std::min(wq.cols, c0 + wq.group_size);
        std::vector<std::size_t> salient_cols, base_cols;
        for (std::size_t c = c0; c < c1; ++c) {
            (mask[c] ? salient_cols : base_cols).push_back(c);
        }
        const auto p_sal =
            class_group_partial(x, wq, salient_cols, x.steps, backend);
        const auto p_base = class_group_partial(x, wq, base_cols, 1, backend);
        for (std::size_t t = 0; t < tokens; ++t) {
            const double d_sal = x.params[t].step_delta;
            const double d_base = x.params[t].v_th_unit;
            for (std::size_t o = 0; o < out; ++o) {
                const double s = wq.scale[o * ngroups + g];
                y.at(t, o) += s * (d_sal * static_cast<double>(p_sal[t * out + o]) +
                                   d_base * static_cast<double>(p_base[t * out + o]));
            }
        }
    }

    // Per-token zero point pulled out of the integer GEMM: zero[t] * (W 1).
    std::vector<double> wrowsum(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::size_t c = 0; c < wq.cols; ++c) {
            acc += wq.scale[o * ngroups + c / wq.group_size] * wq.codes.at(o, c);
        }
        wrowsum[o] = acc;
    }
    for (std::size_t t = 0; t < tokens; ++t) {
        const double zero = x.params[t].zero_point;
        for (std::size_t o = 0; o < out; ++o) {
            y.at(t, o) += zero * wrowsum[o];
        }
    }
    return y;
}

GemmResult event_driven_gemm(const SpikeTrain& x, const Tensor2D& w,
                             const ChannelPlan& plan) {
    plan.validate();
    if (x.form != SpikeForm::ExpandedBinary) {
        throw std::invalid_argument("event_driven_gemm: train must be expanded-binary");
    }
    if (w.cols != x.channels || plan.channels != x.channels) {
        throw std::invalid_argument("event_driven_gemm: shape mismatch");
    }
    const std::size_t tokens = x.tokens;
    const std::size_t out = w.rows;
    const auto mask = plan.salient_mask();

    GemmResult res;
    res.rows = tokens;
    res.cols = out;
    res.reals.assign(tokens * out, 0.0);

    std::vector<double> wrowsum(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
        wrowsum[o] = std::accumulate(w.row(o), w.row(o) + w.cols, 0.0);
    }

    std::vector<double> acc_sal(out), acc_base(out);
    std::uint64_t spikes = 0;
    for (std::size_t t = 0; t < tokens; ++t) {
        std::fill(acc_sal.begin(), acc_sal.end(), 0.0);
        std::fill(acc_base.begin(), acc_base.end(), 0.0);
        for (std::size_t c = 0; c < x.channels; ++c) {
            std::int64_t n = 0;
            for (std::size_t s = 0; s < x.steps; ++s) {
                if (x.code(t, c, s) != 0) {
                    ++n;
                }
            }
            if (n == 0) {
                continue;  // zero spikes perform no work
            }
            spikes += static_cast<std::uint64_t>(n);
            std::vector<double>& acc = mask[c] ? acc_sal : acc_base;
            for (std::int64_t i = 0; i < n; ++i) {
                for (std::size_t o = 0; o < out; ++o) {
                    acc[o] += w.at(o, c);
                }
            }
        }
        const double d_sal = x.params[t].step_delta;
        const double d_base = x.params[t].v_th_unit;
        const double zero = x.params[t].zero_point;
        for (std::size_t o = 0; o < out; ++o) {
            res.reals[t * out + o] =
                d_sal * acc_sal[o] + d_base * acc_base[o] + zero * wrowsum[o];
        }
    }
    res.accumulated_events = spikes * out;
    return res;
}

GemmResult event_driven_gemm(const SpikeTrain& x, const Tensor2D& w) {
    ChannelPlan plan;
    plan.channels = x.channels;
    plan.salient_steps = static_cast<int>(
        x.params.empty() ? 1 : x.params.front().steps);
    plan.levels = x.params.empty() ? 2 : x.params.front().levels_per_step;
    plan.salient_set.resize(x.channels);
    std::iota(plan.salient_set.begin(), plan.salient_set.end(), std::size_t{0});
    return event_driven_gemm(x, w, plan);
}

GemmResult event_driven_gemm_ternary(const SpikeTrain& w_train,
                                     const Tensor2D& deltas, const Tensor2D& x) {
    if (w_train.form != SpikeForm::ExpandedTernary) {
        throw std::invalid_argument(
            "event_driven_gemm_ternary: train must be expanded-ternary");
    }
    if (deltas.rows != w_train.tokens || deltas.cols != w_train.channels ||
        x.rows != w_train.channels) {
        throw std::invalid_argument("event_driven_gemm_ternary: shape mismatch");
    }
    const std::size_t out = w_train.tokens;
    const std::size_t width = x.cols;

    GemmResult res;
    res.rows = out;
    res.cols = width;
    res.reals.assign(out * width, 0.0);
    std::uint64_t spikes = 0;
    for (std::size_t o = 0; o < out; ++o) {
        double* y = res.reals.data() + o * width;
        for (std::size_t c = 0; c < w_train.channels; ++c) {
            for (std::size_t s = 0; s < w_train.steps; ++s) {
                const std::int32_t spike = w_train.code(o, c, s);
                if (spike == 0) {
                    continue;
                }
                ++spikes;
                const double unit = spike > 0 ? deltas.at(o, c) : -deltas.at(o, c);
                const double* xr = x.row(c);
                for (std::size_t j = 0; j < width; ++j) {
                    y[j] += unit * xr[j];
                }
            }
        }
    }
    res.accumulated_events = spikes * width;
    return res;
}

Tensor2D reference_gemm(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("reference_gemm: shape mismatch");
    }
    Tensor2D y(a.rows, b.cols, 0.0);
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t c = 0; c < b.cols; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += a.at(r, k) * b.at(k, c);
            }
            y.at(r, c) = acc;
        }
    }
    return y;
}

}  // namespace spikequant
