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

#include <algorithm>
#include <cmath>
#include <vector>

#include "spikequant/neuron.hpp"
#include "spikequant/rng.hpp"

using namespace spikequant;

namespace {

Tensor2D random_token_tensor(Rng& rng, std::size_t tokens, std::size_t channels) {
    return rng_normal(rng, tokens, channels, 0.0, 1.0);
}

SpikeTrain random_merged_train(Rng& rng, std::size_t tokens, std::size_t channels,
                               int steps, int levels) {
    return gif_encode(random_token_tensor(rng, tokens, channels), steps, levels);
}

}  // namespace

TEST_CASE("compute_token_params: worked examples") {
    SUBCASE("three-element token, T'=4, L=2") {
        const std::vector<double> x = {0.2, 0.9, 0.45};
        const TokenQuantParams p = compute_token_params(x, 4, 2);
        CHECK(p.zero_point == doctest::Approx(0.2));
        CHECK(p.step_delta == doctest::Approx(0.175));
        CHECK(p.v_th_unit == doctest::Approx(0.7));
    }
    SUBCASE("constant token degenerates to zero thresholds") {
        const std::vector<double> x = {3.25, 3.25};
        const TokenQuantParams p = compute_token_params(x, 2, 16);
        CHECK(p.zero_point == 3.25);
        CHECK(p.step_delta == 0.0);
        CHECK(p.v_th_unit == 0.0);
    }
    SUBCASE("delta = range / (T'(L-1))") {
        const std::vector<double> x = {0.0, 1.0};
        const TokenQuantParams p = compute_token_params(x, 2, 16);
        CHECK(p.step_delta == doctest::Approx(1.0 / 30.0));
    }
    SUBCASE("empty token throws") {
        CHECK_THROWS_AS(compute_token_params({}, 2, 16), std::invalid_argument);
    }
}

TEST_CASE("gif_encode: membrane worked example u=0.35, range 0.7, T'=2, L=16") {
    Tensor2D x(1, 3);
    x.data = {0.0, 0.35, 0.7};
    const SpikeTrain s = gif_encode(x, 2, 16);
    CHECK(s.code(0, 1, 0) == 7);
    CHECK(s.code(0, 1, 1) == 8);
    CHECK(s.code_sum(0, 1) == 15);
    const Tensor2D back = gif_decode(s);
    CHECK(back.at(0, 1) == doctest::Approx(0.35).epsilon(1e-12));

    SUBCASE("max element fires full scale at every step, decode is exact") {
        for (std::size_t step = 0; step < 2; ++step) {
            CHECK(s.code(0, 2, step) == 15);
        }
        CHECK(back.at(0, 2) == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("min element emits nothing") {
        CHECK(s.code_sum(0, 0) == 0);
        CHECK(back.at(0, 0) == 0.0);
    }
}

TEST_CASE("gif encode/decode: T'=4, L=2 example token") {
    Tensor2D x(1, 3);
    x.data = {0.2, 0.9, 0.45};
    const SpikeTrain s = gif_encode(x, 4, 2);
    CHECK(s.code_sum(0, 0) == 0);
    CHECK(s.code_sum(0, 1) == 4);
    CHECK(s.code_sum(0, 2) == 1);
    const Tensor2D back = gif_decode(s);
    CHECK(back.at(0, 0) == doctest::Approx(0.2));
    CHECK(back.at(0, 1) == doctest::Approx(0.9));
    CHECK(back.at(0, 2) == doctest::Approx(0.375));
}

TEST_CASE("gif_encode: code totals equal the closed-form floor") {
    Rng rng(2024);
    for (int iter = 0; iter < 50; ++iter) {
        const int steps = 1 + static_cast<int>(rng.next_below(4));
        const int levels = 2 + static_cast<int>(rng.next_below(15));
        const std::size_t channels = 1 + rng.next_below(32);
        const Tensor2D x = random_token_tensor(rng, 4, channels);
        const SpikeTrain s = gif_encode(x, steps, levels);
        for (std::size_t t = 0; t < s.tokens; ++t) {
            const TokenQuantParams& p = s.params[t];
            for (std::size_t c = 0; c < channels; ++c) {
                std::int64_t expected = 0;
                if (p.step_delta > 0.0) {
                    const double u = x.at(t, c) - p.zero_point;
                    expected = static_cast<std::int64_t>(
                        std::floor(u / p.step_delta + 1e-9));
                    expected = std::clamp<std::int64_t>(
                        expected, 0, static_cast<std::int64_t>(steps) * (levels - 1));
                }
                CHECK(s.code_sum(t, c) == expected);
            }
        }
    }
}

TEST_CASE("gif properties: budget, monotonicity, reconstruction bound") {
    Rng rng(77);
    for (int iter = 0; iter < 30; ++iter) {
        const int steps = 1 + static_cast<int>(rng.next_below(4));
        const int levels = 2 + static_cast<int>(rng.next_below(15));
        const Tensor2D x = random_token_tensor(rng, 2, 24);
        const SpikeTrain s = gif_encode(x, steps, levels);
        const Tensor2D back = gif_decode(s);
        for (std::size_t t = 0; t < x.rows; ++t) {
            const double delta = s.params[t].step_delta;
            for (std::size_t c = 0; c < x.cols; ++c) {
                const std::int64_t total = s.code_sum(t, c);
                CHECK(total >= 0);
                CHECK(total <= static_cast<std::int64_t>(steps) * (levels - 1));
                CHECK(std::fabs(x.at(t, c) - back.at(t, c)) <= delta + 1e-12);
                for (std::size_t c2 = 0; c2 < x.cols; ++c2) {
                    if (x.at(t, c) <= x.at(t, c2)) {
                        CHECK(total <= s.code_sum(t, c2));
                    }
                }
            }
        }
    }
}

TEST_CASE("expand: earliest-slot packing") {
    SUBCASE("merged step k=3, L=4 becomes [1,1,1]") {
        Tensor2D x(1, 2);
        x.data = {0.0, 3.0};  // range 3, L=4 -> full scale code 3
        const SpikeTrain merged = gif_encode(x, 1, 4);
        CHECK(merged.code(0, 1, 0) == 3);
        const SpikeTrain bin = expand_train(merged);
        CHECK(bin.steps == 3);
        CHECK(bin.code(0, 1, 0) == 1);
        CHECK(bin.code(0, 1, 1) == 1);
        CHECK(bin.code(0, 1, 2) == 1);
        CHECK(bin.code_sum(0, 0) == 0);
    }
    SUBCASE("merged [7,8] at L=16 becomes 30 slots with 15 ones") {
        Tensor2D full(1, 3);
        full.data = {0.0, 0.35, 0.7};
        const SpikeTrain merged = gif_encode(full, 2, 16);
        const SpikeTrain bin = expand_train(merged);
        CHECK(bin.steps == 30);
        CHECK(bin.code_sum(0, 1) == 15);
        // earliest slots within each merged group
        for (int i = 0; i < 7; ++i) CHECK(bin.code(0, 1, i) == 1);
        for (int i = 7; i < 15; ++i) CHECK(bin.code(0, 1, i) == 0);
        for (int i = 15; i < 23; ++i) CHECK(bin.code(0, 1, i) == 1);
        for (int i = 23; i < 30; ++i) CHECK(bin.code(0, 1, i) == 0);
        // decode is invariant under expansion
        const Tensor2D a = gif_decode(merged);
        const Tensor2D b = gif_decode(bin);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("merge: inverse of expand") {
    SUBCASE("[1,1,1] with L=4 merges to 3") {
        Tensor2D x(1, 1);
        x.data = {1.0};
        SpikeTrain bin;
        bin.tokens = 1;
        bin.channels = 1;
        bin.steps = 3;
        bin.form = SpikeForm::ExpandedBinary;
        bin.codes = {1, 1, 1};
        bin.params.push_back(compute_token_params(x.data, 1, 4));
        const SpikeTrain merged = merge_train(bin, 4);
        CHECK(merged.steps == 1);
        CHECK(merged.code(0, 0, 0) == 3);
    }
    SUBCASE("all-ones 30 slots at L=16 merges to [15,15]") {
        SpikeTrain bin;
        bin.tokens = 1;
        bin.channels = 1;
        bin.steps = 30;
        bin.form = SpikeForm::ExpandedBinary;
        bin.codes.assign(30, 1);
        TokenQuantParams p;
        p.levels_per_step = 16;
        p.steps = 2;
        bin.params.push_back(p);
        const SpikeTrain merged = merge_train(bin, 16);
        CHECK(merged.steps == 2);
        CHECK(merged.code(0, 0, 0) == 15);
        CHECK(merged.code(0, 0, 1) == 15);
    }
    SUBCASE("indivisible step count throws") {
        SpikeTrain bin;
        bin.tokens = 1;
        bin.channels = 1;
        bin.steps = 5;
        bin.form = SpikeForm::ExpandedBinary;
        bin.codes.assign(5, 0);
        bin.params.emplace_back();
        CHECK_THROWS_AS(merge_train(bin, 4), std::invalid_argument);
    }
    SUBCASE("merge(expand(.)) is the identity on random trains") {
        Rng rng(31337);
        for (int iter = 0; iter < 50; ++iter) {
            const int steps = 1 + static_cast<int>(rng.next_below(4));
            const int levels = 2 + static_cast<int>(rng.next_below(15));
            const SpikeTrain merged =
                random_merged_train(rng, 3, 1 + rng.next_below(16), steps, levels);
            const SpikeTrain bin = expand_train(merged);
            const SpikeTrain back = merge_train(bin, levels);
            CHECK(back.codes == merged.codes);
            // expand(merge(.)) reproduces earliest-packed binary trains
            CHECK(expand_train(back).codes == bin.codes);
        }
    }
}

TEST_CASE("ternary_encode: examples and properties") {
    SUBCASE("mixed step vector worked example") {
        const std::vector<double> w = {0.5, -0.2, 0.05, -0.5};
        const std::vector<int> steps = {2, 1, 1, 2};
        const TernaryEncoding enc = ternary_encode(w, steps, 0.5);
        CHECK(enc.train.code_sum(0, 0) == 2);
        CHECK(enc.train.code_sum(0, 1) == 0);
        CHECK(enc.train.code_sum(0, 2) == 0);
        CHECK(enc.train.code_sum(0, 3) == -2);
        const std::vector<double> dec = ternary_decode(enc);
        CHECK(dec[0] == doctest::Approx(0.5));
        CHECK(dec[1] == 0.0);
        CHECK(dec[2] == 0.0);
        CHECK(dec[3] == doctest::Approx(-0.5));
    }
    SUBCASE("zero weight encodes zero at any step count") {
        for (int t : {1, 2, 4}) {
            const TernaryEncoding enc = ternary_encode(
                std::vector<double>{0.0}, std::vector<int>{t}, 1.0);
            CHECK(enc.train.code_sum(0, 0) == 0);
        }
    }
    SUBCASE("full-scale weight is preserved at 4 steps") {
        const TernaryEncoding enc = ternary_encode(
            std::vector<double>{0.5}, std::vector<int>{4}, 0.5);
        CHECK(enc.train.code_sum(0, 0) == 4);
        CHECK(ternary_decode(enc)[0] == doctest::Approx(0.5));
    }
    SUBCASE("zero absmax with nonzero weights throws") {
        CHECK_THROWS_AS(ternary_encode(std::vector<double>{0.1},
                                       std::vector<int>{1}, 0.0),
                        std::invalid_argument);
    }
    SUBCASE("negation flips every code") {
        Rng rng(9);
        for (int iter = 0; iter < 20; ++iter) {
            std::vector<double> w(8);
            std::vector<int> steps(8);
            double absmax = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] = rng.next_unit() * 2.0 - 1.0;
                steps[i] = 1 << rng.next_below(3);
                absmax = std::max(absmax, std::fabs(w[i]));
            }
            std::vector<double> neg = w;
            for (double& v : neg) {
                v = -v;
            }
            const TernaryEncoding a = ternary_encode(w, steps, absmax);
            const TernaryEncoding b = ternary_encode(neg, steps, absmax);
            for (std::size_t i = 0; i < w.size(); ++i) {
                CHECK(a.train.code_sum(0, i) == -b.train.code_sum(0, i));
            }
        }
    }
}
