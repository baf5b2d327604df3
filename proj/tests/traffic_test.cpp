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
#include "tensorcast/traffic.hpp"

#include <gtest/gtest.h>

#include <random>

#include "tensorcast/kernels.hpp"

namespace tc = tensorcast;
namespace traffic = tc::traffic;
using traffic::TrafficParams;

namespace {

TrafficParams params(std::uint64_t l, std::uint64_t b, std::uint64_t u,
                     std::uint64_t d) {
  TrafficParams p;
  p.lookups = l;
  p.outputs = b;
  p.unique_rows = u;
  p.dim = d;
  return p;
}

TEST(TrafficFormulas, GatherReduce) {
  const auto r = traffic::gather_reduce(params(10, 1, 10, 64));
  EXPECT_EQ(r.bytes_read, 2560u);
  EXPECT_EQ(r.bytes_written, 256u);
  EXPECT_EQ(r.index_bytes, 160u);
  EXPECT_EQ(r.total(), 2560u + 256u + 160u);
}

TEST(TrafficFormulas, GatherReduceSymmetricWhenLEqualsB) {
  const auto r = traffic::gather_reduce(params(16, 16, 8, 32));
  EXPECT_EQ(r.bytes_read, r.bytes_written);
}

TEST(TrafficFormulas, DoublingDimDoublesElementBytesOnly) {
  const auto r1 = traffic::gather_reduce(params(10, 2, 8, 64));
  const auto r2 = traffic::gather_reduce(params(10, 2, 8, 128));
  EXPECT_EQ(2 * r1.bytes_read, r2.bytes_read);
  EXPECT_EQ(2 * r1.bytes_written, r2.bytes_written);
  EXPECT_EQ(r1.index_bytes, r2.index_bytes);
}

TEST(TrafficFormulas, ExpandMirrorsGatherReduce) {
  const auto r = traffic::expand(params(10, 1, 10, 64));
  EXPECT_EQ(r.bytes_read, 256u);
  EXPECT_EQ(r.bytes_written, 2560u);
  EXPECT_EQ(r.index_bytes, 80u);  // expand only touches dst
}

TEST(TrafficFormulas, InvalidParamsRejected) {
  EXPECT_THROW(traffic::expand(params(0, 1, 1, 64)), std::invalid_argument);
  EXPECT_THROW(traffic::expand(params(4, 1, 5, 64)), std::invalid_argument);
}

TEST(TrafficFormulas, CoalesceZeroReuse) {
  const auto r = traffic::coalesce(params(10, 1, 10, 64));
  EXPECT_EQ(r.bytes_read, 5120u);
  EXPECT_EQ(r.bytes_written, 2560u);
}

TEST(TrafficFormulas, CoalesceFullReuseWritesOneRow) {
  const auto r = traffic::coalesce(params(10, 1, 1, 64));
  EXPECT_EQ(r.bytes_written, 64u * 4u);
}

// The two headline ratios at 10 gathers per output and duplicate-heavy reuse
// (U = 0.8 L; index bytes excluded).
TEST(TrafficFormulas, BackwardOverForwardRatioNearThree) {
  const auto p = params(20480, 2048, 16384, 64);
  const double fwd = traffic::gather_reduce(p).element_bytes();
  const double bwd =
      traffic::expand(p).element_bytes() + traffic::coalesce(p).element_bytes();
  EXPECT_GE(bwd / fwd, 2.5);
  EXPECT_LE(bwd / fwd, 3.5);
}

TEST(TrafficFormulas, CastedHalvesExpandCoalesce) {
  // holds across the reuse range, including U == L
  for (std::uint64_t u : {20480u, 16384u, 10240u, 6827u}) {
    const auto p = params(20480, 2048, u, 64);
    const double casted = traffic::casted_gather_reduce(p).element_bytes();
    const double bwd = traffic::expand(p).element_bytes() +
                       traffic::coalesce(p).element_bytes();
    EXPECT_LE(casted / bwd, 0.55) << "U=" << u;
  }
}

TEST(TrafficFormulas, CastedMatchesGatherReduceWithRolesSwapped) {
  const auto p = params(10, 3, 7, 64);
  auto swapped = p;
  swapped.outputs = p.unique_rows;
  const auto casted = traffic::casted_gather_reduce(p);
  const auto gather = traffic::gather_reduce(swapped);
  EXPECT_EQ(casted.bytes_read, gather.bytes_read);
  EXPECT_EQ(casted.bytes_written, gather.bytes_written);
  EXPECT_EQ(casted.index_bytes, gather.index_bytes);
}

TEST(TrafficFormulas, CastedAlwaysBelowExpandPlusCoalesce) {
  std::mt19937_64 rng(47);
  for (int it = 0; it < 500; ++it) {
    const std::uint64_t l = 1 + rng() % 10000;
    const std::uint64_t b = 1 + rng() % 4096;
    const std::uint64_t u = 1 + rng() % l;
    const std::uint64_t d = 1 + rng() % 256;
    const auto p = params(l, b, u, d);
    EXPECT_LT(traffic::casted_gather_reduce(p).total(),
              traffic::expand(p).total() + traffic::coalesce(p).total());
  }
}

TEST(TrafficFormulas, Scatter) {
  const auto r = traffic::scatter(params(100, 1, 4, 2));
  EXPECT_EQ(r.bytes_read, 32u);
  EXPECT_EQ(r.bytes_written, 32u);
  EXPECT_EQ(r.index_bytes, 4u * 8u);
  // independent of L
  const auto r2 = traffic::scatter(params(5000, 1, 4, 2));
  EXPECT_EQ(r.total(), r2.total());
}

TEST(TrafficFormulas, ShrinkingUShrinksCoalesceAndScatterOnly) {
  const auto high = params(1000, 100, 900, 64);
  const auto low = params(1000, 100, 300, 64);
  EXPECT_LT(traffic::coalesce(low).total(), traffic::coalesce(high).total());
  EXPECT_LT(traffic::scatter(low).total(), traffic::scatter(high).total());
  EXPECT_EQ(traffic::gather_reduce(low).total(),
            traffic::gather_reduce(high).total());
  EXPECT_EQ(traffic::expand(low).total(), traffic::expand(high).total());
}

TEST(TrafficFormulas, CsvRow) {
  const auto r = traffic::gather_reduce(params(10, 1, 10, 64));
  EXPECT_EQ(r.csv_row(), "gather_reduce,2560,256,160,2976");
  EXPECT_STREQ(traffic::traffic_csv_header(),
               "primitive,reads,writes,index,total");
}

// ---------------------------------------------------------------------------
// Instrumented kernels against the analytical formulas
// ---------------------------------------------------------------------------

struct Measured {
  traffic::TrafficReport gather, expand, coalesce, casted, scatter;
  TrafficParams p;
};

Measured measure(const tc::EmbeddingTable& table, const tc::LookupIndex& idx,
                 const tc::GradientBatch& grad) {
  Measured m;
  traffic::Counter c1, c2, c3, c4, c5;

  (void)tc::kernels::gather_reduce(table, idx, &c1);
  const auto exp = tc::kernels::expand_gradients(grad, idx, &c2);
  const auto coal = tc::kernels::coalesce_gradients(idx, exp, &c3);
  const auto cast = tc::kernels::tensor_casting(idx);
  (void)tc::kernels::casted_gather_reduce(cast, grad, &c4);
  auto scratch = table;
  tc::kernels::gradient_scatter(
      scratch, coal,
      [](std::span<float> w, std::span<const float> g) {
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= g[k];
      },
      &c5);

  m.gather = c1.report(traffic::Primitive::GatherReduce);
  m.expand = c2.report(traffic::Primitive::Expand);
  m.coalesce = c3.report(traffic::Primitive::Coalesce);
  m.casted = c4.report(traffic::Primitive::CastedGatherReduce);
  m.scatter = c5.report(traffic::Primitive::Scatter);
  m.p = params(idx.size(), idx.num_outputs, cast.num_unique(), table.dim);
  return m;
}

void expect_report_eq(const traffic::TrafficReport& measured,
                      const traffic::TrafficReport& analytical) {
  EXPECT_EQ(measured.bytes_read, analytical.bytes_read) << measured.primitive;
  EXPECT_EQ(measured.bytes_written, analytical.bytes_written)
      << measured.primitive;
  EXPECT_EQ(measured.index_bytes, analytical.index_bytes) << measured.primitive;
}

TEST(MeasuredTraffic, WorkedInstanceMatchesFormulas) {
  tc::EmbeddingTable table(5, 2);
  tc::LookupIndex idx{{1, 2, 4, 0, 2}, {0, 0, 0, 1, 1}, 2};
  tc::GradientBatch grad(2, 2);
  const auto m = measure(table, idx, grad);
  EXPECT_EQ(m.p.lookups, 5u);
  EXPECT_EQ(m.p.outputs, 2u);
  EXPECT_EQ(m.p.unique_rows, 4u);
  expect_report_eq(m.gather, traffic::gather_reduce(m.p));
  expect_report_eq(m.expand, traffic::expand(m.p));
  expect_report_eq(m.coalesce, traffic::coalesce(m.p));
  expect_report_eq(m.casted, traffic::casted_gather_reduce(m.p));
  expect_report_eq(m.scatter, traffic::scatter(m.p));
}

TEST(MeasuredTraffic, AllUniqueInstance) {
  tc::EmbeddingTable table(8, 4);
  tc::LookupIndex idx{{7, 3, 1, 5}, {0, 0, 1, 1}, 2};
  tc::GradientBatch grad(2, 4);
  const auto m = measure(table, idx, grad);
  EXPECT_EQ(m.p.unique_rows, m.p.lookups);
  expect_report_eq(m.coalesce, traffic::coalesce(m.p));
  expect_report_eq(m.casted, traffic::casted_gather_reduce(m.p));
}

TEST(MeasuredTraffic, RandomizedAgreement) {
  std::mt19937_64 rng(53);
  for (int it = 0; it < 100; ++it) {
    const std::uint64_t rows = 1 + rng() % 64;
    const std::uint64_t dim = 1 + rng() % 8;
    const std::uint64_t outputs = 1 + rng() % 16;
    const std::uint64_t lookups = 1 + rng() % 128;
    tc::EmbeddingTable table(rows, dim);
    tc::GradientBatch grad(outputs, dim);
    tc::LookupIndex idx;
    idx.num_outputs = outputs;
    for (std::uint64_t i = 0; i < lookups; ++i) {
      idx.src.push_back(rng() % rows);
      idx.dst.push_back(rng() % outputs);
    }
    const auto m = measure(table, idx, grad);
    expect_report_eq(m.gather, traffic::gather_reduce(m.p));
    expect_report_eq(m.expand, traffic::expand(m.p));
    expect_report_eq(m.coalesce, traffic::coalesce(m.p));
    expect_report_eq(m.casted, traffic::casted_gather_reduce(m.p));
    expect_report_eq(m.scatter, traffic::scatter(m.p));
  }
}

}  // namespace
