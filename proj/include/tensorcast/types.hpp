/* Copyright 2026 The TensorCast Authors. All Rights Reserved.

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

#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tensorcast {

using RowId = std::uint64_t;
using SlotId = std::uint64_t;

namespace detail {

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail_range(const std::string& msg) {
  throw std::out_of_range(msg);
}

}  // namespace detail

/// Dense row-major matrix of 32-bit reals. Used for gradient batches,
/// expanded gradients and gather-reduce outputs.
struct RowMatrix {
  std::uint64_t rows = 0;
  std::uint64_t dim = 0;
  std::vector<float> data;

  RowMatrix() = default;
  RowMatrix(std::uint64_t rows_, std::uint64_t dim_)
      : rows(rows_), dim(dim_), data(rows_ * dim_, 0.0f) {}

  std::span<float> row(std::uint64_t r) {
    return {data.data() + r * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const float> row(std::uint64_t r) const {
    return {data.data() + r * dim, static_cast<std::size_t>(dim)};
  }
};

/// Backpropagated gradients, one row per reduced output slot (B x dim).
using GradientBatch = RowMatrix;

/// The trainable parameters of one sparse feature: rows x dim, row-major,
/// stored contiguously.
struct EmbeddingTable {
  std::uint64_t rows = 0;
  std::uint64_t dim = 0;
  std::vector<float> data;

  EmbeddingTable() = default;
  EmbeddingTable(std::uint64_t rows_, std::uint64_t dim_)
      : rows(rows_), dim(dim_), data(rows_ * dim_, 0.0f) {
    validate();
  }

  std::span<float> row(RowId r) {
    return {data.data() + r * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const float> row(RowId r) const {
    return {data.data() + r * dim, static_cast<std::size_t>(dim)};
  }

  void validate() const {
    if (rows < 1 || dim < 1) {
      detail::fail("EmbeddingTable: rows and dim must be >= 1");
    }
    if (data.size() != rows * dim) {
      std::ostringstream os;
      os << "EmbeddingTable: data length " << data.size() << " != rows*dim "
         << rows * dim;
      detail::fail(os.str());
    }
  }
};

/// (src, dst) lookup pairs: src[i] names a table row, dst[i] the output slot
/// its vector is reduced into. dst is contiguous per batch element when
/// produced by the workload generator, but nothing here requires that.
struct LookupIndex {
  std::vector<RowId> src;
  std::vector<SlotId> dst;
  std::uint64_t num_outputs = 0;

  std::uint64_t size() const { return src.size(); }

  void validate(const EmbeddingTable& table) const {
    validate_shape();
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] >= table.rows) {
        std::ostringstream os;
        os << "LookupIndex: src[" << i << "]=" << src[i]
           << " out of range (table has " << table.rows << " rows)";
        detail::fail_range(os.str());
      }
    }
    validate_dst();
  }

  void validate_shape() const {
    if (src.empty()) detail::fail("LookupIndex: empty index (L must be >= 1)");
    if (src.size() != dst.size()) {
      std::ostringstream os;
      os << "LookupIndex: src length " << src.size() << " != dst length "
         << dst.size();
      detail::fail(os.str());
    }
    if (num_outputs < 1) detail::fail("LookupIndex: num_outputs must be >= 1");
  }

  void validate_dst() const {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i] >= num_outputs) {
        std::ostringstream os;
        os << "LookupIndex: dst[" << i << "]=" << dst[i]
           << " out of range (num_outputs " << num_outputs << ")";
        detail::fail_range(os.str());
      }
    }
  }
};

/// Permuted index produced by tensor casting. casted_src indexes gradient
/// rows, casted_dst the coalesced output rows (non-decreasing, unit steps),
/// unique_rows the table rows those outputs scatter to.
struct CastedIndex {
  std::vector<SlotId> casted_src;
  std::vector<std::uint64_t> casted_dst;
  std::vector<RowId> unique_rows;

  std::uint64_t size() const { return casted_src.size(); }
  std::uint64_t num_unique() const { return unique_rows.size(); }

  void validate() const {
    if (casted_src.empty()) detail::fail("CastedIndex: empty index");
    if (casted_src.size() != casted_dst.size()) {
      detail::fail("CastedIndex: casted_src/casted_dst length mismatch");
    }
    if (casted_dst.front() != 0) {
      detail::fail("CastedIndex: casted_dst must start at 0");
    }
    for (std::size_t i = 1; i < casted_dst.size(); ++i) {
      const auto step = casted_dst[i] - casted_dst[i - 1];
      if (casted_dst[i] < casted_dst[i - 1] || step > 1) {
        std::ostringstream os;
        os << "CastedIndex: casted_dst[" << i << "] breaks the unit-step rule";
        detail::fail(os.str());
      }
    }
    if (unique_rows.size() != casted_dst.back() + 1) {
      detail::fail("CastedIndex: unique_rows length != max(casted_dst)+1");
    }
    for (std::size_t u = 1; u < unique_rows.size(); ++u) {
      if (unique_rows[u] <= unique_rows[u - 1]) {
        detail::fail("CastedIndex: unique_rows must be strictly increasing");
      }
    }
  }
};

/// Per-unique-row accumulated gradients; rows is strictly increasing.
struct CoalescedGradients {
  std::vector<RowId> rows;
  RowMatrix grads;

  std::uint64_t num_rows() const { return rows.size(); }
};

}  // namespace tensorcast
