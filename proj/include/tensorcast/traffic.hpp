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
#include <sstream>
#include <string>

#include "tensorcast/types.hpp"

namespace tensorcast::traffic {

enum class Primitive : int {
  GatherReduce,
  Expand,
  Coalesce,
  CastedGatherReduce,
  Scatter,
};

inline const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::GatherReduce: return "gather_reduce";
    case Primitive::Expand: return "expand";
    case Primitive::Coalesce: return "coalesce";
    case Primitive::CastedGatherReduce: return "casted_gather_reduce";
    case Primitive::Scatter: return "scatter";
  }
  return "unknown";
}

/// Byte counts for one primitive invocation. Element and index bytes are
/// reported separately so either inclusion convention is recoverable.
struct TrafficReport {
  std::string primitive;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  std::uint64_t index_bytes = 0;

  std::uint64_t total() const { return bytes_read + bytes_written + index_bytes; }
  std::uint64_t element_bytes() const { return bytes_read + bytes_written; }

  std::string csv_row() const {
    std::ostringstream os;
    os << primitive << ',' << bytes_read << ',' << bytes_written << ','
       << index_bytes << ',' << total();
    return os.str();
  }
};

inline const char* traffic_csv_header() {
  return "primitive,reads,writes,index,total";
}

/// Analysis knobs: L lookups reduced into B outputs touching U unique rows
/// of dim-wide vectors. Every logical access counts as a memory access; no
/// cache is modeled.
struct TrafficParams {
  std::uint64_t lookups = 0;      // L
  std::uint64_t outputs = 0;      // B
  std::uint64_t unique_rows = 0;  // U
  std::uint64_t dim = 64;         // D
  std::uint64_t elem_bytes = 4;
  std::uint64_t idx_bytes = 8;

  void validate() const {
    if (lookups < 1 || outputs < 1 || unique_rows < 1 || dim < 1) {
      detail::fail("TrafficParams: L, B, U, D must all be >= 1");
    }
    if (unique_rows > lookups) {
      detail::fail("TrafficParams: U must not exceed L");
    }
  }

  std::uint64_t vec_bytes() const { return dim * elem_bytes; }
};

// reads every looked-up row, writes every output slot (zero-filled or not),
// streams the full (src, dst) pair.
inline TrafficReport gather_reduce(const TrafficParams& p) {
  p.validate();
  return {primitive_name(Primitive::GatherReduce),
          p.lookups * p.vec_bytes(), p.outputs * p.vec_bytes(),
          2 * p.lookups * p.idx_bytes};
}

// dual of gather-reduce: streams the B gradient rows once, writes L copies.
inline TrafficReport expand(const TrafficParams& p) {
  p.validate();
  return {primitive_name(Primitive::Expand), p.outputs * p.vec_bytes(),
          p.lookups * p.vec_bytes(), p.lookups * p.idx_bytes};
}

// accumulation step only (the sort's bytes are charged as time elsewhere):
// reads the L expanded rows plus one read-modify of each of the U outputs.
inline TrafficReport coalesce(const TrafficParams& p) {
  p.validate();
  return {primitive_name(Primitive::Coalesce),
          (p.lookups + p.unique_rows) * p.vec_bytes(),
          p.unique_rows * p.vec_bytes(), 2 * p.lookups * p.idx_bytes};
}

// the fused pass never materializes expanded gradients: L gradient-row reads
// straight into U coalesced outputs.
inline TrafficReport casted_gather_reduce(const TrafficParams& p) {
  p.validate();
  return {primitive_name(Primitive::CastedGatherReduce),
          p.lookups * p.vec_bytes(), p.unique_rows * p.vec_bytes(),
          2 * p.lookups * p.idx_bytes};
}

// read-modify-update of the U touched table rows; independent of L.
inline TrafficReport scatter(const TrafficParams& p) {
  p.validate();
  return {primitive_name(Primitive::Scatter), p.unique_rows * p.vec_bytes(),
          p.unique_rows * p.vec_bytes(), p.unique_rows * p.idx_bytes};
}

inline TrafficReport report_for(Primitive prim, const TrafficParams& p) {
  switch (prim) {
    case Primitive::GatherReduce: return gather_reduce(p);
    case Primitive::Expand: return expand(p);
    case Primitive::Coalesce: return coalesce(p);
    case Primitive::CastedGatherReduce: return casted_gather_reduce(p);
    case Primitive::Scatter: return scatter(p);
  }
  detail::fail("report_for: unknown primitive");
}

/// Instrumentation hook the kernels increment at their load/store sites.
/// Element-byte tallies match the analytical formulas exactly by
/// construction; tests hold them to that.
struct Counter {
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  std::uint64_t index_bytes = 0;

  void read_elems(std::uint64_t n, std::uint64_t elem_bytes = 4) {
    bytes_read += n * elem_bytes;
  }
  void write_elems(std::uint64_t n, std::uint64_t elem_bytes = 4) {
    bytes_written += n * elem_bytes;
  }
  void read_indices(std::uint64_t n, std::uint64_t idx_bytes = 8) {
    index_bytes += n * idx_bytes;
  }

  TrafficReport report(Primitive prim) const {
    return {primitive_name(prim), bytes_read, bytes_written, index_bytes};
  }
};

}  // namespace tensorcast::traffic
