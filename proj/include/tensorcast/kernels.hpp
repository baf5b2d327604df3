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
//
// The five embedding-training primitives plus gradient scatter.
//
// All reductions accumulate in double and round to float once at write-out,
// in ascending lookup order, so the two backward routes
//   coalesce_gradients(idx, expand_gradients(grad, idx))
//   casted_gather_reduce(tensor_casting(idx), grad)
// add the same doubles in the same sequence and agree bit-for-bit.
//
// Every kernel optionally tallies its loads/stores into a traffic::Counter.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <vector>

#include "tensorcast/traffic.hpp"
#include "tensorcast/types.hpp"

namespace tensorcast::kernels {

namespace detail {

using tensorcast::detail::fail;
using tensorcast::detail::fail_range;

inline void add_row(std::span<double> acc, std::span<const float> v) {
  for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
}

inline void round_out(std::span<float> out, std::span<const double> acc) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<float>(acc[k]);
  }
}

}  // namespace detail

/// Fused forward lookup: out[b] = sum of table rows whose dst slot is b.
/// Output slots no lookup targets stay zero.
inline RowMatrix gather_reduce(const EmbeddingTable& table,
                               const LookupIndex& idx,
                               traffic::Counter* counter = nullptr) {
  idx.validate(table);
  const std::uint64_t n = idx.size();
  const std::uint64_t dim = table.dim;

  std::vector<double> acc(idx.num_outputs * dim, 0.0);
  for (std::uint64_t i = 0; i < n; ++i) {
    detail::add_row({acc.data() + idx.dst[i] * dim, dim}, table.row(idx.src[i]));
    if (counter) {
      counter->read_elems(dim);
      counter->read_indices(2);
    }
  }

  RowMatrix out(idx.num_outputs, dim);
  detail::round_out({out.data.data(), out.data.size()}, acc);
  if (counter) counter->write_elems(idx.num_outputs * dim);
  return out;
}

/// Backward dual of the reduce: replicates grad.row(dst[i]) into slot i.
inline RowMatrix expand_gradients(const GradientBatch& grad,
                                  const LookupIndex& idx,
                                  traffic::Counter* counter = nullptr) {
  idx.validate_shape();
  idx.validate_dst();
  if (grad.rows != idx.num_outputs) {
    std::ostringstream os;
    os << "expand_gradients: gradient batch has " << grad.rows
       << " rows but index expects " << idx.num_outputs;
    detail::fail(os.str());
  }

  const std::uint64_t n = idx.size();
  RowMatrix expanded(n, grad.dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto src_row = grad.row(idx.dst[i]);
    std::copy(src_row.begin(), src_row.end(), expanded.row(i).begin());
    if (counter) {
      counter->write_elems(grad.dim);
      counter->read_indices(1);
    }
  }
  // the gradient table is streamed once, one load per batch row
  if (counter) counter->read_elems(grad.rows * grad.dim);
  return expanded;
}

/// Two-step gradient coalescing: arg-sort src (stable), then accumulate runs
/// of equal sorted src into consecutive output rows.
inline CoalescedGradients coalesce_gradients(
    const LookupIndex& idx, const RowMatrix& exp_grad,
    traffic::Counter* counter = nullptr) {
  idx.validate_shape();
  const std::uint64_t n = idx.size();
  if (exp_grad.rows != n) {
    std::ostringstream os;
    os << "coalesce_gradients: expanded gradients have " << exp_grad.rows
       << " rows, index has " << n;
    detail::fail(os.str());
  }
  const std::uint64_t dim = exp_grad.dim;

  // Step A: sort src, keeping ties in original order.
  std::vector<std::uint64_t> sorted_pos(n);
  std::iota(sorted_pos.begin(), sorted_pos.end(), 0);
  std::stable_sort(sorted_pos.begin(), sorted_pos.end(),
                   [&](std::uint64_t a, std::uint64_t b) {
                     return idx.src[a] < idx.src[b];
                   });

  // Step B: accumulate each run into one output row.
  CoalescedGradients coal;
  std::vector<double> acc;
  acc.reserve(n * dim);
  RowId prev = 0;
  for (std::uint64_t j = 0; j < n; ++j) {
    const std::uint64_t pos = sorted_pos[j];
    const RowId curr = idx.src[pos];
    if (j == 0 || curr != prev) {
      coal.rows.push_back(curr);
      acc.resize(acc.size() + dim, 0.0);
      if (counter) counter->read_elems(dim);  // read-modify of the fresh row
    }
    detail::add_row({acc.data() + (coal.rows.size() - 1) * dim, dim},
                    exp_grad.row(pos));
    if (counter) {
      counter->read_elems(dim);
      counter->read_indices(2);  // sorted position + sorted key
    }
    prev = curr;
  }

  coal.grads = RowMatrix(coal.rows.size(), dim);
  detail::round_out({coal.grads.data.data(), coal.grads.data.size()}, acc);
  if (counter) counter->write_elems(coal.rows.size() * dim);
  return coal;
}

/// Index permutation that turns expand-coalesce into one gather-reduce:
/// stable sort-by-key on src, take the sorted dst as the casted src, and
/// prefix-sum a run-head scan (minus one) as the casted dst.
inline CastedIndex tensor_casting(const LookupIndex& idx) {
  idx.validate_shape();
  const std::uint64_t n = idx.size();

  std::vector<std::uint64_t> sorted_pos(n);
  std::iota(sorted_pos.begin(), sorted_pos.end(), 0);
  std::stable_sort(sorted_pos.begin(), sorted_pos.end(),
                   [&](std::uint64_t a, std::uint64_t b) {
                     return idx.src[a] < idx.src[b];
                   });

  CastedIndex cast;
  cast.casted_src.resize(n);
  cast.casted_dst.resize(n);
  std::uint64_t run = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const RowId key = idx.src[sorted_pos[i]];
    cast.casted_src[i] = idx.dst[sorted_pos[i]];
    if (i == 0 || key != idx.src[sorted_pos[i - 1]]) {
      cast.unique_rows.push_back(key);
      if (i != 0) ++run;
    }
    cast.casted_dst[i] = run;
  }
  return cast;
}

/// Algorithm-3 fused pass: one gather-reduce over the gradient "table" using
/// the casted index. Functionally equal to expand + coalesce.
inline CoalescedGradients casted_gather_reduce(
    const CastedIndex& cast, const GradientBatch& grad,
    traffic::Counter* counter = nullptr) {
  cast.validate();
  const std::uint64_t n = cast.size();
  const std::uint64_t num_unique = cast.num_unique();
  const std::uint64_t dim = grad.dim;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (cast.casted_src[i] >= grad.rows) {
      std::ostringstream os;
      os << "casted_gather_reduce: casted_src[" << i << "]=" << cast.casted_src[i]
         << " out of range (gradient batch has " << grad.rows << " rows)";
      detail::fail_range(os.str());
    }
  }

  std::vector<double> acc(num_unique * dim, 0.0);
  for (std::uint64_t i = 0; i < n; ++i) {
    detail::add_row({acc.data() + cast.casted_dst[i] * dim, dim},
                    grad.row(cast.casted_src[i]));
    if (counter) {
      counter->read_elems(dim);
      counter->read_indices(2);
    }
  }

  CoalescedGradients coal;
  coal.rows = cast.unique_rows;
  coal.grads = RowMatrix(num_unique, dim);
  detail::round_out({coal.grads.data.data(), coal.grads.data.size()}, acc);
  if (counter) counter->write_elems(num_unique * dim);
  return coal;
}

/// Applies `update(row, grad)` to each touched table row. Bounds are checked
/// before any row is mutated; untouched rows are left bit-identical.
template <typename UpdateFn>
void gradient_scatter(EmbeddingTable& table, const CoalescedGradients& coal,
                      UpdateFn&& update, traffic::Counter* counter = nullptr) {
  if (coal.rows.empty()) detail::fail("gradient_scatter: empty update set");
  if (coal.grads.dim != table.dim) {
    detail::fail("gradient_scatter: gradient dim != table dim");
  }
  for (std::size_t u = 0; u < coal.rows.size(); ++u) {
    if (coal.rows[u] >= table.rows) {
      std::ostringstream os;
      os << "gradient_scatter: rows[" << u << "]=" << coal.rows[u]
         << " out of range (table has " << table.rows << " rows)";
      detail::fail_range(os.str());
    }
  }

  for (std::size_t u = 0; u < coal.rows.size(); ++u) {
    update(table.row(coal.rows[u]), coal.grads.row(u));
    if (counter) {
      counter->read_elems(table.dim);
      counter->write_elems(table.dim);
      counter->read_indices(1);
    }
  }
}

}  // namespace tensorcast::kernels
