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
#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "spikequant/kernels.hpp"
#include "spikequant/rng.hpp"

using namespace spikequant;

namespace {

IntMat random_codes(Rng& rng, std::size_t rows, std::size_t cols, int bits) {
    IntMat m(rows, cols);
    for (auto& v : m.data) {
        v = static_cast<std::int32_t>(rng.next_below(1ULL << bits));
    }
    return m;
}

ChannelPlan plan_of(std::size_t channels, int t_prime, int levels,
                    std::vector<std::size_t> selected) {
    ChannelPlan plan;
    plan.channels = channels;
    plan.salient_steps = t_prime;
    plan.levels = levels;
    plan.salient_set = std::move(selected);
    return plan;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double scale = 0.0;
    for (double v : b) {
        scale = std::max(scale, std::fabs(v));
    }
    if (scale == 0.0) {
        scale = 1.0;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
    }
    return worst;
}

}  // namespace

TEST_CASE("pack_bitplanes: binary expansion and roundtrip") {
    SUBCASE("codes [[3,1]] at 2 bits") {
        IntMat codes(1, 2);
        codes.data = {3, 1};
        const BitPlanes bp = pack_bitplanes(codes, 2);
        CHECK((bp.plane_row(0, 0)[0] & 0x3) == 0x3);  // bit0: [1,1]
        CHECK((bp.plane_row(1, 0)[0] & 0x3) == 0x1);  // bit1: [1,0]
    }
    SUBCASE("zeros pack to zero planes") {
        const BitPlanes bp = pack_bitplanes(IntMat(3, 70, 0), 4);
        for (std::uint64_t w : bp.words) {
            CHECK(w == 0);
        }
    }
    SUBCASE("random 64x64 4-bit roundtrip") {
        Rng rng(100);
        const IntMat codes = random_codes(rng, 64, 64, 4);
        CHECK(unpack_bitplanes(pack_bitplanes(codes, 4)).data == codes.data);
    }
    SUBCASE("out-of-range code throws") {
        IntMat codes(1, 1);
        codes.data = {4};
        CHECK_THROWS_AS(pack_bitplanes(codes, 2), std::out_of_range);
        codes.data = {-1};
        CHECK_THROWS_AS(pack_bitplanes(codes, 2), std::out_of_range);
    }
    SUBCASE("padding bits beyond cols stay zero") {
        IntMat codes(1, 3);
        codes.data = {1, 1, 1};
        const BitPlanes bp = pack_bitplanes(codes, 1);
        CHECK(bp.plane_row(0, 0)[0] == 0x7);
    }
}

TEST_CASE("bitserial_gemm: hand case and naive oracle") {
    SUBCASE("a=[3,1], w=[2,3] gives 9") {
        IntMat a(1, 2), w(1, 2);
        a.data = {3, 1};
        w.data = {2, 3};
        const GemmResult r = bitserial_gemm(pack_bitplanes(a, 2), pack_bitplanes(w, 2));
        CHECK(r.int_at(0, 0) == 9);
    }
    SUBCASE("identity codes pass weights through") {
        IntMat eye(4, 4, 0);
        for (std::size_t i = 0; i < 4; ++i) {
            eye.at(i, i) = 1;
        }
        Rng rng(200);
        const IntMat w = random_codes(rng, 5, 4, 4);
        const GemmResult r = bitserial_gemm(pack_bitplanes(eye, 1), pack_bitplanes(w, 4));
        for (std::size_t t = 0; t < 4; ++t) {
            for (std::size_t o = 0; o < 5; ++o) {
                CHECK(r.int_at(t, o) == w.at(o, t));
            }
        }
    }
    SUBCASE("random 32x48 by 48x16 4-bit equals the naive integer GEMM") {
        Rng rng(300);
        for (int iter = 0; iter < 10; ++iter) {
            const IntMat a = random_codes(rng, 32, 48, 4);
            const IntMat w = random_codes(rng, 16, 48, 4);
            const GemmResult r =
                bitserial_gemm(pack_bitplanes(a, 4), pack_bitplanes(w, 4));
            CHECK(r.ints == oracles::naive_int_gemm(a, w));
        }
    }
    SUBCASE("row partitions stitch to the full result") {
        Rng rng(400);
        const IntMat a = random_codes(rng, 10, 33, 3);
        const IntMat w = random_codes(rng, 7, 33, 3);
        const GemmResult full =
            bitserial_gemm(pack_bitplanes(a, 3), pack_bitplanes(w, 3));
        IntMat top(4, 33), bottom(6, 33);
        std::copy(a.data.begin(), a.data.begin() + 4 * 33, top.data.begin());
        std::copy(a.data.begin() + 4 * 33, a.data.end(), bottom.data.begin());
        const GemmResult rt = bitserial_gemm(pack_bitplanes(top, 3), pack_bitplanes(w, 3));
        const GemmResult rb =
            bitserial_gemm(pack_bitplanes(bottom, 3), pack_bitplanes(w, 3));
        std::vector<std::int64_t> stitched = rt.ints;
        stitched.insert(stitched.end(), rb.ints.begin(), rb.ints.end());
        CHECK(stitched == full.ints);
    }
    SUBCASE("shape mismatch throws") {
        CHECK_THROWS_AS(bitserial_gemm(pack_bitplanes(IntMat(1, 2, 0), 1),
                                       pack_bitplanes(IntMat(1, 3, 0), 1)),
                        std::invalid_argument);
    }
}

TEST_CASE("mixed_step_gemm: backends agree with the dequantized float path") {
    Rng rng(500);
    for (int iter = 0; iter < 8; ++iter) {
        const std::size_t tokens = 4 + rng.next_below(8);
        const std::size_t channels = 8 + rng.next_below(150);
        const std::size_t out = 4 + rng.next_below(12);
        const int t_prime = 1 + static_cast<int>(rng.next_below(4));
        const Tensor2D x = rng_normal(rng, tokens, channels, 0.0, 1.0);
        const Tensor2D w = rng_normal(rng, out, channels, 0.0, 0.5);
        std::vector<std::size_t> sel;
        for (std::size_t c = 0; c < channels; ++c) {
            if (rng.next_below(10) == 0) {
                sel.push_back(c);
            }
        }
        const ChannelPlan plan = plan_of(channels, t_prime, 16, sel);
        const SpikeTrain train = mixed_step_quantize(x, plan);
        const QuantizedTensor wq = group_quantize_symmetric(w, 4, 128);

        const Tensor2D naive = mixed_step_gemm(train, wq, plan, MixedGemmBackend::Naive);
        const Tensor2D bits = mixed_step_gemm(train, wq, plan, MixedGemmBackend::BitSerial);
        CHECK(naive.data == bits.data);  // both fold identical integer partials

        const Tensor2D ref = reference_gemm(mixed_step_dequantize(train, plan),
                                            dequantize(wq).transposed());
        CHECK(max_rel_diff(naive.data, ref.data) <= 1e-6);
    }
}

TEST_CASE("mixed_step_gemm: empty salient set equals the plain quantized GEMM") {
    Rng rng(600);
    const Tensor2D x = rng_normal(rng, 6, 20, 0.0, 1.0);
    const Tensor2D w = rng_normal(rng, 5, 20, 0.0, 1.0);
    const ChannelPlan plan = plan_of(20, 2, 16, {});
    const SpikeTrain train = mixed_step_quantize(x, plan);
    const QuantizedTensor wq = group_quantize_symmetric(w, 4, 128);
    const Tensor2D y = mixed_step_gemm(train, wq, plan);
    const Tensor2D ref = reference_gemm(mixed_step_dequantize(train, plan),
                                        dequantize(wq).transposed());
    CHECK(max_rel_diff(y.data, ref.data) <= 1e-9);
}

TEST_CASE("event_driven_gemm: spikes, affine term, event counts") {
    SUBCASE("all-zero train leaves only the zero-point correction") {
        Tensor2D x(2, 3, 4.2);  // constant tokens: no spikes, zero_point = 4.2
        const ChannelPlan plan = plan_of(3, 2, 16, {});
        const SpikeTrain merged = mixed_step_quantize(x, plan);
        const SpikeTrain bin = expand_train(merged);
        Rng rng(700);
        const Tensor2D w = rng_normal(rng, 4, 3, 0.0, 1.0);
        const GemmResult r = event_driven_gemm(bin, w, plan);
        CHECK(r.accumulated_events == 0);
        for (std::size_t t = 0; t < 2; ++t) {
            for (std::size_t o = 0; o < 4; ++o) {
                double rowsum = 0.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    rowsum += w.at(o, c);
                }
                CHECK(r.real_at(t, o) == doctest::Approx(4.2 * rowsum).epsilon(1e-12));
            }
        }
    }
    SUBCASE("single spike adds one scaled weight row") {
        // token [0, delta]: channel 1 fires exactly once
        Tensor2D x(1, 2);
        x.data = {0.0, 1.0};
        const ChannelPlan plan = plan_of(2, 1, 2, {});
        const SpikeTrain merged = mixed_step_quantize(x, plan);
        const SpikeTrain bin = expand_train(merged);
        Tensor2D w(3, 2);
        w.data = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
        const GemmResult r = event_driven_gemm(bin, w, plan);
        CHECK(r.accumulated_events == 3);  // one spike times out width
        for (std::size_t o = 0; o < 3; ++o) {
            CHECK(r.real_at(0, o) == doctest::Approx(w.at(o, 1)).epsilon(1e-12));
        }
    }
    SUBCASE("random mixed train matches the bit-serial path within 1e-6") {
        Rng rng(800);
        for (int iter = 0; iter < 6; ++iter) {
            const std::size_t tokens = 3 + rng.next_below(6);
            const std::size_t channels = 8 + rng.next_below(40);
            const std::size_t out = 3 + rng.next_below(8);
            const Tensor2D x = rng_normal(rng, tokens, channels, 0.0, 1.0);
            const Tensor2D w = rng_normal(rng, out, channels, 0.0, 0.5);
            std::vector<std::size_t> sel;
            for (std::size_t c = 0; c < channels; c += 5) {
                sel.push_back(c);
            }
            const ChannelPlan plan = plan_of(channels, 2, 16, sel);
            const SpikeTrain train = mixed_step_quantize(x, plan);
            const QuantizedTensor wq = group_quantize_symmetric(w, 4, 128);
            const Tensor2D bits =
                mixed_step_gemm(train, wq, plan, MixedGemmBackend::BitSerial);
            const SpikeTrain bin = expand_train(train);
            const GemmResult ev = event_driven_gemm(bin, dequantize(wq), plan);
            CHECK(max_rel_diff(ev.reals, bits.data) <= 1e-6);

            std::size_t nonzero = 0;
            for (std::int32_t c : bin.codes) {
                if (c != 0) {
                    ++nonzero;
                }
            }
            CHECK(ev.accumulated_events == nonzero * out);
        }
    }
    SUBCASE("merged form is rejected") {
        Tensor2D x(1, 2);
        x.data = {0.0, 1.0};
        const ChannelPlan plan = plan_of(2, 1, 2, {});
        const SpikeTrain merged = mixed_step_quantize(x, plan);
        CHECK_THROWS_AS(event_driven_gemm(merged, Tensor2D(1, 2, 0.0), plan),
                        std::invalid_argument);
    }
}

TEST_CASE("event_driven_gemm_ternary: signed accumulation") {
    const std::vector<double> wvec = {0.5, -0.2, 0.05, -0.5};
    const std::vector<int> steps = {2, 1, 1, 2};
    const TernaryEncoding enc = ternary_encode(wvec, steps, 0.5);
    Tensor2D deltas(1, 4);
    deltas.data = enc.deltas;
    Rng rng(900);
    const Tensor2D x = rng_normal(rng, 4, 5, 0.0, 1.0);
    const GemmResult r = event_driven_gemm_ternary(enc.train, deltas, x);
    // oracle: decoded weights times x
    const std::vector<double> dec = ternary_decode(enc);
    for (std::size_t j = 0; j < 5; ++j) {
        double expected = 0.0;
        for (std::size_t c = 0; c < 4; ++c) {
            expected += dec[c] * x.at(c, j);
        }
        CHECK(r.real_at(0, j) == doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(r.accumulated_events == 4 * 5);  // |2| + 0 + 0 + |-2| spikes x width
}

TEST_CASE("reference_gemm: identity, scalars, associativity") {
    SUBCASE("identity passthrough") {
        Tensor2D eye(3, 3, 0.0);
        for (std::size_t i = 0; i < 3; ++i) {
            eye.at(i, i) = 1.0;
        }
        Rng rng(1000);
        const Tensor2D m = rng_normal(rng, 3, 4, 0.0, 1.0);
        CHECK(reference_gemm(eye, m).data == m.data);
    }
    SUBCASE("1x1 product") {
        const Tensor2D a(1, 1, 3.0), b(1, 1, -2.0);
        CHECK(reference_gemm(a, b).at(0, 0) == -6.0);
    }
    SUBCASE("associativity within 1e-10 on 8x8") {
        Rng rng(1100);
        const Tensor2D a = rng_normal(rng, 8, 8, 0.0, 1.0);
        const Tensor2D b = rng_normal(rng, 8, 8, 0.0, 1.0);
        const Tensor2D v = rng_normal(rng, 8, 1, 0.0, 1.0);
        const Tensor2D left = reference_gemm(reference_gemm(a, b), v);
        const Tensor2D right = reference_gemm(a, reference_gemm(b, v));
        for (std::size_t i = 0; i < left.size(); ++i) {
            CHECK(left.data[i] == doctest::Approx(right.data[i]).epsilon(1e-10));
        }
    }
    SUBCASE("matches the independent naive loop") {
        Rng rng(1200);
        const Tensor2D a = rng_normal(rng, 5, 7, 0.0, 1.0);
        const Tensor2D b = rng_normal(rng, 7, 6, 0.0, 1.0);
        const Tensor2D y = reference_gemm(a, b);
        const Tensor2D expected = oracles::naive_matmul(a, b);
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(y.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-12));
        }
    }
}
