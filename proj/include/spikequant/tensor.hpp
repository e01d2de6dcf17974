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
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace spikequant {

/// Dense row-major matrix of doubles. Rows are tokens for activations and
/// output features for weights; storage is always 64-bit, file I/O rounds
/// to 32-bit at the boundary.
struct Tensor2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2D() = default;
    Tensor2D(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}
    Tensor2D(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    std::size_t size() const { return data.size(); }

    /// True when the shape is consistent and every value is finite.
    bool valid() const;
    Tensor2D transposed() const;
};

/// Dense row-major matrix of 32-bit integers (quantized codes).
struct IntMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int32_t> data;

    IntMat() = default;
    IntMat(std::size_t r, std::size_t c, std::int32_t fill = 0)
        : rows(r), cols(c), data(r * c, fill) {}

    std::int32_t& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    std::int32_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
};

}  // namespace spikequant
