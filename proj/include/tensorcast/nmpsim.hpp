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
// Analytical timing model of a rank-level near-memory tensor gather-scatter
// unit. Tables interleave row-round-robin across ranks; each rank moves its
// rows at its own bandwidth in 64-byte chunks and all ranks run in parallel,
// so elapsed time is set by the most-loaded rank. Reductions happen in the
// per-rank vector ALU and gather outputs drain through I/O buffers, neither
// of which is charged; scatter is charged write-only.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "tensorcast/traffic.hpp"
#include "tensorcast/types.hpp"

namespace tensorcast::nmp {

struct NmpConfig {
  std::uint32_t num_ranks = 32;
  double rank_bw = 25.6e9;            // bytes/sec, per rank
  std::uint64_t access_granularity = 64;  // bytes, minimum per-rank access
  double dispatch_latency = 0.0;      // GPU -> NMP instruction latency, sec

  double aggregate_bw() const { return num_ranks * rank_bw; }

  void validate() const {
    if (num_ranks < 1) detail::fail("NmpConfig: num_ranks must be >= 1");
    if (!(rank_bw > 0)) detail::fail("NmpConfig: rank_bw must be > 0");
    if (access_granularity < 1) {
      detail::fail("NmpConfig: access_granularity must be >= 1");
    }
  }
};

enum class NmpOp : int { GatherReduce, Scatter };

/// One CISC-style command: move `row_ids` of `vector_bytes`-wide vectors for
/// table `table_id`. dst_slots matter for functional execution, not timing.
struct NmpInstruction {
  NmpOp op = NmpOp::GatherReduce;
  std::uint64_t table_id = 0;
  std::vector<RowId> row_ids;
  std::vector<SlotId> dst_slots;
  std::uint64_t vector_bytes = 256;
};

struct NmpResult {
  double elapsed = 0.0;
  std::vector<std::uint64_t> per_rank_accesses;
  double effective_bw = 0.0;
  std::uint32_t bottleneck_rank = 0;

  std::uint64_t total_accesses() const {
    std::uint64_t n = 0;
    for (auto a : per_rank_accesses) n += a;
    return n;
  }
};

/// Row-round-robin interleave; each table starts one rank after the previous.
inline std::uint32_t rank_of(std::uint64_t table_id, RowId row_id,
                             const NmpConfig& cfg) {
  return static_cast<std::uint32_t>((table_id + row_id) % cfg.num_ranks);
}

inline std::uint64_t accesses_per_row(std::uint64_t vector_bytes,
                                      const NmpConfig& cfg) {
  return (vector_bytes + cfg.access_granularity - 1) / cfg.access_granularity;
}

namespace detail {

using tensorcast::detail::fail;

inline NmpResult result_from_histogram(std::vector<std::uint64_t> per_rank,
                                       const NmpConfig& cfg) {
  NmpResult res;
  res.per_rank_accesses = std::move(per_rank);
  std::uint64_t max_accesses = 0;
  for (std::uint32_t r = 0; r < cfg.num_ranks; ++r) {
    if (res.per_rank_accesses[r] > max_accesses) {
      max_accesses = res.per_rank_accesses[r];
      res.bottleneck_rank = r;
    }
  }
  res.elapsed = cfg.dispatch_latency +
                static_cast<double>(max_accesses * cfg.access_granularity) /
                    cfg.rank_bw;
  const std::uint64_t total_bytes =
      res.total_accesses() * cfg.access_granularity;
  res.effective_bw = res.elapsed > 0 ? total_bytes / res.elapsed : 0.0;
  return res;
}

}  // namespace detail

/// Times a stream of instructions dispatched together: the per-rank access
/// histograms add up and every rank works in parallel.
inline NmpResult execute(std::span<const NmpInstruction> stream,
                         const NmpConfig& cfg) {
  cfg.validate();
  if (stream.empty()) detail::fail("execute: empty instruction stream");
  std::vector<std::uint64_t> per_rank(cfg.num_ranks, 0);
  for (const auto& instr : stream) {
    if (instr.row_ids.empty()) {
      tensorcast::detail::fail("execute: instruction has an empty row list");
    }
    const std::uint64_t apr = accesses_per_row(instr.vector_bytes, cfg);
    for (RowId row : instr.row_ids) {
      per_rank[rank_of(instr.table_id, row, cfg)] += apr;
    }
  }
  return detail::result_from_histogram(std::move(per_rank), cfg);
}

inline NmpResult execute(const NmpInstruction& instr, const NmpConfig& cfg) {
  return execute(std::span<const NmpInstruction>(&instr, 1), cfg);
}

/// Bridge from the traffic model: times one primitive assuming its implied
/// rows land round-robin (uniform) across ranks. Only the primitives the
/// gather-scatter unit executes are accepted.
inline double time_primitive(traffic::Primitive prim,
                             const traffic::TrafficParams& p,
                             const NmpConfig& cfg) {
  p.validate();
  cfg.validate();
  std::uint64_t rows = 0;
  switch (prim) {
    case traffic::Primitive::GatherReduce:
    case traffic::Primitive::CastedGatherReduce:
      rows = p.lookups;
      break;
    case traffic::Primitive::Scatter:
      rows = p.unique_rows;
      break;
    default:
      detail::fail("time_primitive: primitive does not map to the NMP unit");
  }
  const std::uint64_t apr = accesses_per_row(p.vec_bytes(), cfg);
  const std::uint64_t bottleneck =
      (rows + cfg.num_ranks - 1) / cfg.num_ranks * apr;
  return cfg.dispatch_latency +
         static_cast<double>(bottleneck * cfg.access_granularity) / cfg.rank_bw;
}

/// Host-side fallback: the primitive's full traffic through one flat pipe.
inline double time_primitive_host(traffic::Primitive prim,
                                  const traffic::TrafficParams& p,
                                  double host_bw) {
  if (!(host_bw > 0)) detail::fail("time_primitive_host: host_bw must be > 0");
  return static_cast<double>(traffic::report_for(prim, p).total()) / host_bw;
}

}  // namespace tensorcast::nmp
