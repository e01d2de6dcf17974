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

#include <stdexcept>
#include <string>

#include "spikequant/tensor.hpp"

namespace spikequant {

// SPKT container format (bit-exact):
//   magic "SPKT" (53 50 4B 54), u32 LE version=1, u8 dtype (0=real32,
//   1=int32), u8 ndim (must be 2), 2 zero bytes, ndim x u64 LE dims,
//   then row-major payload, little endian. No padding after the header.

enum class SpktErrorKind {
    BadMagic,
    BadVersion,
    BadDtype,
    BadRank,
    Truncated,
    DimOverflow,
    Io,
};

class SpktError : public std::runtime_error {
  public:
    SpktError(SpktErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    SpktErrorKind kind() const { return kind_; }

  private:
    SpktErrorKind kind_;
};

Tensor2D tensor_read(const std::string& path);
void tensor_write(const Tensor2D& t, const std::string& path);

IntMat int_matrix_read(const std::string& path);
void int_matrix_write(const IntMat& m, const std::string& path);

}  // namespace spikequant
