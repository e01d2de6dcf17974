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
#include "spikequant/spkt_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <limits>

namespace spikequant {

namespace {

constexpr std::array<unsigned char, 4> kMagic = {0x53, 0x50, 0x4B, 0x54};  // "SPKT"
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeReal32 = 0;
constexpr std::uint8_t kDtypeInt32 = 1;
// Payload cap: keeps rows*cols*4 well inside size_t and catches corrupt dims.
constexpr std::uint64_t kMaxElements = 1ULL << 40;

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    f.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    f.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

struct Header {
    std::uint8_t dtype = 0;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};

Header read_header(std::ifstream& f, const std::string& path,
                   std::uint8_t expected_dtype) {
    unsigned char raw[28];
    f.read(reinterpret_cast<char*>(raw), sizeof raw);
    if (f.gcount() != static_cast<std::streamsize>(sizeof raw)) {
        throw SpktError(SpktErrorKind::Truncated,
                        path + ": truncated SPKT header");
    }
    if (std::memcmp(raw, kMagic.data(), 4) != 0) {
        throw SpktError(SpktErrorKind::BadMagic, path + ": bad magic bytes");
    }
    const std::uint32_t version = get_u32(raw + 4);
    if (version != kVersion) {
        throw SpktError(SpktErrorKind::BadVersion,
                        path + ": unsupported SPKT version " + std::to_string(version));
    }
    Header h;
    h.dtype = raw[8];
    if (h.dtype != kDtypeReal32 && h.dtype != kDtypeInt32) {
        throw SpktError(SpktErrorKind::BadDtype,
                        path + ": unsupported dtype " + std::to_string(h.dtype));
    }
    if (h.dtype != expected_dtype) {
        throw SpktError(SpktErrorKind::BadDtype,
                        path + ": dtype " + std::to_string(h.dtype) +
                            " does not match the requested reader");
    }
    const std::uint8_t ndim = raw[9];
    if (ndim != 2) {
        throw SpktError(SpktErrorKind::BadRank,
                        path + ": ndim must be 2, got " + std::to_string(ndim));
    }
    h.rows = get_u64(raw + 12);
    h.cols = get_u64(raw + 20);
    if (h.rows != 0 && h.cols > kMaxElements / (h.rows ? h.rows : 1)) {
        throw SpktError(SpktErrorKind::DimOverflow,
                        path + ": dimension product overflows");
    }
    if (h.rows > kMaxElements || h.cols > kMaxElements) {
        throw SpktError(SpktErrorKind::DimOverflow, path + ": dimension overflows");
    }
    return h;
}

void read_payload(std::ifstream& f, const std::string& path, void* dst,
                  std::size_t bytes) {
    f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (f.gcount() != static_cast<std::streamsize>(bytes)) {
        throw SpktError(SpktErrorKind::Truncated, path + ": truncated payload");
    }
}

// Validates the payload length against the file size before any allocation.
void check_payload_size(std::ifstream& f, const std::string& path,
                        std::uint64_t elements, std::size_t item_size) {
    const auto pos = f.tellg();
    f.seekg(0, std::ios::end);
    const auto end = f.tellg();
    f.seekg(pos);
    const std::uint64_t remaining = static_cast<std::uint64_t>(end - pos);
    if (remaining < elements * item_size) {
        throw SpktError(SpktErrorKind::Truncated, path + ": truncated payload");
    }
}

void write_header(std::ofstream& f, std::uint8_t dtype, std::uint64_t rows,
                  std::uint64_t cols) {
    f.write(reinterpret_cast<const char*>(kMagic.data()), 4);
    put_u32(f, kVersion);
    const char meta[4] = {static_cast<char>(dtype), 2, 0, 0};
    f.write(meta, 4);
    put_u64(f, rows);
    put_u64(f, cols);
}

}  // namespace

Tensor2D tensor_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": cannot open for reading");
    }
    const Header h = read_header(f, path, kDtypeReal32);
    const std::size_t n = static_cast<std::size_t>(h.rows * h.cols);
    check_payload_size(f, path, n, sizeof(float));
    std::vector<float> payload(n);
    read_payload(f, path, payload.data(), n * sizeof(float));
    Tensor2D t(static_cast<std::size_t>(h.rows), static_cast<std::size_t>(h.cols));
    for (std::size_t i = 0; i < n; ++i) {
        t.data[i] = static_cast<double>(payload[i]);
    }
    return t;
}

void tensor_write(const Tensor2D& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": cannot open for writing");
    }
    write_header(f, kDtypeReal32, t.rows, t.cols);
    std::vector<float> payload(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        payload[i] = static_cast<float>(t.data[i]);
    }
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": write failed");
    }
}

IntMat int_matrix_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": cannot open for reading");
    }
    const Header h = read_header(f, path, kDtypeInt32);
    const std::size_t n = static_cast<std::size_t>(h.rows * h.cols);
    check_payload_size(f, path, n, sizeof(std::int32_t));
    IntMat m(static_cast<std::size_t>(h.rows), static_cast<std::size_t>(h.cols));
    read_payload(f, path, m.data.data(), n * sizeof(std::int32_t));
    return m;
}

void int_matrix_write(const IntMat& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": cannot open for writing");
    }
    write_header(f, kDtypeInt32, m.rows, m.cols);
    f.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(std::int32_t)));
    if (!f) {
        throw SpktError(SpktErrorKind::Io, path + ": write failed");
    }
}

}  // namespace spikequant
