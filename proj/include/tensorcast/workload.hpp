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
// DLRM-like workload generation: model configurations, lookup distributions
// (uniform / Zipf / histogram files), deterministic index-stream generation
// and the coalescing-shrink sweep. All randomness flows through an explicit
// splitmix64-seeded mt19937_64 with hand-rolled canonical doubles, so a
// (config, distribution, seed) triple reproduces bit-identically across
// platforms.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tensorcast/csv.hpp"
#include "tensorcast/kernels.hpp"
#include "tensorcast/types.hpp"

namespace tensorcast::workload {

struct ModelConfig {
  std::string name;
  std::uint64_t num_tables = 1;
  std::uint64_t gathers_per_table = 1;  // per batch element
  std::uint64_t table_rows = 1'000'000;
  std::uint64_t dim = 64;
  std::uint64_t batch = 2048;
  std::vector<std::uint64_t> bottom_mlp;
  std::vector<std::uint64_t> top_mlp;

  std::uint64_t lookups_per_table() const { return batch * gathers_per_table; }

  void validate() const {
    if (num_tables < 1 || gathers_per_table < 1 || table_rows < 1 || dim < 1 ||
        batch < 1) {
      detail::fail("ModelConfig: all counts must be >= 1");
    }
  }
};

inline std::vector<ModelConfig> builtin_models() {
  return {
      {"RM1", 10, 80, 1'000'000, 64, 2048, {256, 128, 64}, {256, 64, 1}},
      {"RM2", 40, 80, 1'000'000, 64, 2048, {256, 128, 64}, {512, 128, 1}},
      {"RM3", 10, 20, 1'000'000, 64, 2048, {2560, 512, 64}, {512, 128, 1}},
      {"RM4", 10, 20, 1'000'000, 64, 2048,
       {2560, 1024, 64}, {2048, 2048, 1024, 1}},
  };
}

inline ModelConfig find_model(const std::string& name) {
  for (auto& m : builtin_models()) {
    if (m.name == name) return m;
  }
  detail::fail("unknown model: " + name);
}

namespace detail {

using tensorcast::detail::fail;

// splitmix64; used to derive independent per-table seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// uniform double in [0, 1); implementation-independent, unlike
// std::uniform_real_distribution.
inline double canonical(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Probability of lookup per table row, held as a cumulative table. Zipf
/// rank k (0-based) carries mass proportional to (k+1)^-s; histogram
/// distributions carry whatever the file said.
struct LookupDistribution {
  enum class Kind : int { Uniform, Zipf, Histogram };

  Kind kind = Kind::Uniform;
  std::uint64_t num_rows = 0;   // support is [0, num_rows) unless ids set
  double zipf_s = 1.05;
  std::vector<RowId> ids;       // histogram support (parallel to cdf)
  std::vector<double> cdf;      // inclusive cumulative probabilities

  static LookupDistribution uniform(std::uint64_t rows) {
    if (rows < 1) detail::fail("uniform distribution needs >= 1 row");
    LookupDistribution d;
    d.kind = Kind::Uniform;
    d.num_rows = rows;
    return d;
  }

  static LookupDistribution zipf(double s, std::uint64_t rows) {
    if (rows < 1) detail::fail("zipf distribution needs >= 1 row");
    if (!(s > 0)) detail::fail("zipf exponent must be > 0");
    LookupDistribution d;
    d.kind = Kind::Zipf;
    d.num_rows = rows;
    d.zipf_s = s;
    d.cdf.resize(rows);
    double sum = 0.0;
    for (std::uint64_t k = 0; k < rows; ++k) {
      sum += std::pow(static_cast<double>(k + 1), -s);
      d.cdf[k] = sum;
    }
    for (auto& c : d.cdf) c /= sum;
    d.cdf.back() = 1.0;
    return d;
  }

  static LookupDistribution histogram(std::vector<RowId> row_ids,
                                      const std::vector<std::uint64_t>& counts) {
    if (row_ids.empty() || row_ids.size() != counts.size()) {
      detail::fail("histogram distribution: ids/counts shape mismatch");
    }
    LookupDistribution d;
    d.kind = Kind::Histogram;
    d.ids = std::move(row_ids);
    d.num_rows = *std::max_element(d.ids.begin(), d.ids.end()) + 1;
    d.cdf.resize(counts.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      sum += static_cast<double>(counts[i]);
      d.cdf[i] = sum;
    }
    if (!(sum > 0)) detail::fail("histogram distribution: all counts are zero");
    for (auto& c : d.cdf) c /= sum;
    d.cdf.back() = 1.0;
    return d;
  }

  RowId sample(std::mt19937_64& rng) const {
    const double u = detail::canonical(rng);
    switch (kind) {
      case Kind::Uniform:
        return std::min<RowId>(
            static_cast<RowId>(u * static_cast<double>(num_rows)),
            num_rows - 1);
      case Kind::Zipf: {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return static_cast<RowId>(it - cdf.begin());
      }
      case Kind::Histogram: {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return ids[static_cast<std::size_t>(it - cdf.begin())];
      }
    }
    detail::fail("sample: unknown distribution kind");
  }

  /// Total probability mass on the first `n` ranks of the support.
  double head_mass(std::uint64_t n) const {
    if (kind == Kind::Uniform) {
      return static_cast<double>(std::min(n, num_rows)) /
             static_cast<double>(num_rows);
    }
    if (n == 0) return 0.0;
    const std::size_t i = std::min<std::size_t>(n, cdf.size()) - 1;
    return cdf[i];
  }
};

/// Parses `row_id,count` lines (header optional) into a distribution.
inline LookupDistribution load_histogram(const std::string& path) {
  const csv::U64Pairs pairs = csv::load_u64_pairs(path);
  return LookupDistribution::histogram(pairs.first, pairs.second);
}

inline void save_histogram(const std::string& path,
                           const std::vector<RowId>& ids,
                           const std::vector<std::uint64_t>& counts) {
  if (ids.size() != counts.size()) {
    detail::fail("save_histogram: ids/counts shape mismatch");
  }
  std::ostringstream os;
  os << "row_id,count\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    os << ids[i] << ',' << counts[i] << '\n';
  }
  csv::write_file(path, os.str());
}

/// One lookup index per table: L = batch x gathers draws for src, dst laid
/// out contiguously per batch element. Tables draw from independent streams
/// derived from (seed, table).
inline std::vector<LookupIndex> gen_lookups(const ModelConfig& cfg,
                                            const LookupDistribution& dist,
                                            std::uint64_t seed) {
  cfg.validate();
  if (dist.num_rows == 0) detail::fail("gen_lookups: empty distribution");
  if (dist.num_rows > cfg.table_rows) {
    detail::fail("gen_lookups: distribution support exceeds table_rows");
  }

  std::vector<LookupIndex> out(cfg.num_tables);
  for (std::uint64_t t = 0; t < cfg.num_tables; ++t) {
    std::mt19937_64 rng(detail::mix64(seed ^ detail::mix64(t + 1)));
    LookupIndex& idx = out[t];
    const std::uint64_t n = cfg.lookups_per_table();
    idx.src.resize(n);
    idx.dst.resize(n);
    idx.num_outputs = cfg.batch;
    for (std::uint64_t i = 0; i < n; ++i) {
      idx.src[i] = dist.sample(rng);
      idx.dst[i] = i / cfg.gathers_per_table;
    }
  }
  return out;
}

struct ShrinkRow {
  std::uint64_t batch = 0;
  double expanded_rows = 0;   // mean L per table
  double coalesced_rows = 0;  // mean U per table
  double expanded_per_output = 0;
  double coalesced_per_output = 0;

  double shrink_ratio() const { return coalesced_rows / expanded_rows; }
};

/// Measures, per batch size, how far coalescing shrinks the expanded
/// gradient tensor (U/L), using tensor casting to count unique rows.
inline std::vector<ShrinkRow> coalesce_shrink(const ModelConfig& cfg,
                                              const LookupDistribution& dist,
                                              const std::vector<std::uint64_t>& batches,
                                              std::uint64_t seed) {
  std::vector<ShrinkRow> rows;
  rows.reserve(batches.size());
  for (std::uint64_t batch : batches) {
    ModelConfig c = cfg;
    c.batch = batch;
    const auto indices = gen_lookups(c, dist, seed);
    double sum_l = 0.0, sum_u = 0.0;
    for (const auto& idx : indices) {
      sum_l += static_cast<double>(idx.size());
      sum_u += static_cast<double>(kernels::tensor_casting(idx).num_unique());
    }
    ShrinkRow r;
    r.batch = batch;
    r.expanded_rows = sum_l / static_cast<double>(c.num_tables);
    r.coalesced_rows = sum_u / static_cast<double>(c.num_tables);
    r.expanded_per_output = r.expanded_rows / static_cast<double>(batch);
    r.coalesced_per_output = r.coalesced_rows / static_cast<double>(batch);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace tensorcast::workload
