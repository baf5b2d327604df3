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
#include "tensorcast/experiment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tc = tensorcast;
namespace ex = tc::experiment;
namespace pl = tc::pipeline;
using ex::ExperimentConfig;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_model_config(const std::filesystem::path& out) {
  return {
      {"model",
       {{"name", "small"},
        {"num_tables", 2},
        {"gathers_per_table", 4},
        {"table_rows", 1000},
        {"dim", 16},
        {"batch", 32},
        {"bottom_mlp", {64, 32, 16}},
        {"top_mlp", {32, 1}}}},
      {"distribution", {{"kind", "zipf"}, {"s", 1.05}}},
      {"seed", 7},
      {"out_dir", out.string()},
  };
}

TEST(ParseConfig, DefaultsAndOverrides) {
  const auto cfg = ex::parse_config(json::object());
  EXPECT_EQ(cfg.model.name, "RM1");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.batches, std::vector<std::uint64_t>{2048});
  EXPECT_EQ(cfg.dims, std::vector<std::uint64_t>{64});
  EXPECT_EQ(cfg.designs.size(), 4u);
  EXPECT_DOUBLE_EQ(cfg.bw.nmp.rank_bw, 25.6e9);
  EXPECT_EQ(cfg.bw.nmp.num_ranks, 32u);

  const json j = {{"model", "RM3"},
                  {"seed", 9},
                  {"batches", {128, 256}},
                  {"designs", {"OursNMP"}},
                  {"bandwidth",
                   {{"host_bw", 50e9},
                    {"nmp", {{"ranks", 16}, {"rank_bw", 12.8e9}}}}},
                  {"optimizer", {{"kind", "rmsprop"}, {"gamma", 0.95}}}};
  const auto c2 = ex::parse_config(j);
  EXPECT_EQ(c2.model.gathers_per_table, 20u);
  EXPECT_EQ(c2.seed, 9u);
  EXPECT_EQ(c2.batches, (std::vector<std::uint64_t>{128, 256}));
  EXPECT_EQ(c2.designs, std::vector<pl::SystemDesign>{pl::SystemDesign::OursNMP});
  EXPECT_DOUBLE_EQ(c2.bw.host_bw, 50e9);
  EXPECT_EQ(c2.bw.nmp.num_ranks, 16u);
  EXPECT_EQ(c2.opt.kind, tc::optim::OptimizerKind::RMSprop);
  EXPECT_DOUBLE_EQ(c2.opt.gamma, 0.95);
  EXPECT_NE(cfg.config_hash, c2.config_hash);
}

TEST(ParseConfig, RejectsUnknownNames) {
  EXPECT_THROW(ex::parse_config({{"designs", {"Fastest"}}}),
               std::invalid_argument);
  EXPECT_THROW(ex::parse_config({{"optimizer", {{"kind", "adam"}}}}),
               std::invalid_argument);
  EXPECT_THROW(ex::parse_config({{"model", "RM7"}}), std::invalid_argument);
}

TEST(MlpTiming, DerivedFromLayerLists) {
  const auto rm1 = tc::workload::find_model("RM1");
  // bottom 256*128 + 128*64, top 256*64 + 64*1
  const double macs = 256 * 128 + 128 * 64 + 256 * 64 + 64 * 1;
  EXPECT_DOUBLE_EQ(ex::mlp_fwd_seconds(rm1, 2048, 15e12),
                   2.0 * macs * 2048 / 15e12);
  // RM4 is MLP-heavy: an order of magnitude more work than RM1
  const auto rm4 = tc::workload::find_model("RM4");
  EXPECT_GT(ex::mlp_fwd_seconds(rm4, 2048, 15e12),
            10 * ex::mlp_fwd_seconds(rm1, 2048, 15e12));
}

TEST(DeriveDurations, MatchesTrafficAndRankModel) {
  auto cfg = ex::parse_config(small_model_config(temp_dir("tc_derive")));
  const auto dist = ex::make_distribution(cfg);
  const auto indices = tc::workload::gen_lookups(cfg.model, dist, cfg.seed);
  const auto d = ex::derive_durations(cfg, indices, cfg.model.batch,
                                      cfg.model.dim);

  // recompute the CPU forward time straight from the traffic formulas
  double fwd_expected = 0;
  std::uint64_t lookups = 0;
  for (const auto& idx : indices) {
    tc::traffic::TrafficParams p;
    p.lookups = idx.size();
    p.outputs = cfg.model.batch;
    p.unique_rows = tc::kernels::tensor_casting(idx).num_unique();
    p.dim = cfg.model.dim;
    fwd_expected += tc::traffic::gather_reduce(p).total() / cfg.bw.host_bw;
    lookups += idx.size();
  }
  EXPECT_DOUBLE_EQ(d.fwd_cpu, fwd_expected);
  EXPECT_EQ(d.total_lookups, lookups);
  EXPECT_DOUBLE_EQ(d.index_copy, 2.0 * lookups * 8 / cfg.bw.link_bw);
  EXPECT_GT(d.expand_coalesce_cpu, d.cgr_cpu);  // the casting win on CPU
  EXPECT_GT(d.fwd_nmp, 0.0);
  EXPECT_LT(d.fwd_nmp, d.fwd_cpu);

  // every design schedules without missing-stage errors
  for (auto design :
       {pl::SystemDesign::BaselineCPU, pl::SystemDesign::BaselineNMP,
        pl::SystemDesign::OursCPU, pl::SystemDesign::OursNMP}) {
    EXPECT_NO_THROW(pl::schedule(design, d.for_design(design)));
  }
}

TEST(Equivalence, PassesOnRandomInstances) {
  ex::EquivalenceOptions opts;
  opts.instances = 50;
  opts.seed = 21;
  const auto rep = ex::run_equivalence(opts);
  EXPECT_TRUE(rep.passed);
  EXPECT_TRUE(rep.golden_ok);
  EXPECT_EQ(rep.instances_run, 50u);
  EXPECT_LE(rep.max_rel_error, 1e-6);
}

TEST(Equivalence, InjectedFaultIsCaughtWithSeed) {
  ex::EquivalenceOptions opts;
  opts.instances = 50;
  opts.seed = 21;
  opts.inject_fault = true;
  const auto rep = ex::run_equivalence(opts);
  EXPECT_FALSE(rep.passed);
  EXPECT_GE(rep.failing_seed, opts.seed + opts.instances / 2);
  EXPECT_NE(rep.failure.find(std::to_string(rep.failing_seed)),
            std::string::npos);
}

TEST(Commands, EquivalenceExitStatus) {
  auto cfg = ex::parse_config(json::object());
  cfg.equivalence_instances = 25;
  std::ostringstream out;
  EXPECT_EQ(ex::cmd_equivalence(cfg, out), 0);
  EXPECT_NE(out.str().find("PASS"), std::string::npos);
  EXPECT_NE(out.str().find("seed=42"), std::string::npos);

  std::ostringstream out2;
  EXPECT_EQ(ex::cmd_equivalence(cfg, out2, /*inject_fault=*/true), 1);
  EXPECT_NE(out2.str().find("FAILED"), std::string::npos);
}

TEST(Commands, TrafficEmitsAllPrimitives) {
  const auto dir = temp_dir("tc_traffic");
  auto cfg = ex::parse_config(small_model_config(dir));
  std::ostringstream out;
  EXPECT_EQ(ex::cmd_traffic(cfg, out), 0);
  for (const char* prim : {"gather_reduce", "expand", "coalesce",
                           "casted_gather_reduce", "scatter"}) {
    EXPECT_NE(out.str().find(prim), std::string::npos) << prim;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "traffic.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_EQ(read_file(dir / "traffic.csv"), out.str());
}

TEST(Commands, RunEmitsTimelinesAndSpeedups) {
  const auto dir = temp_dir("tc_run");
  auto j = small_model_config(dir);
  j["batches"] = {8, 16, 32};
  auto cfg = ex::parse_config(j);
  std::ostringstream out;
  EXPECT_EQ(ex::cmd_run(cfg, out), 0);

  // one timeline file per (design, batch, dim) cell
  std::size_t timelines = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().filename().string().rfind("timeline_", 0) == 0) {
      ++timelines;
    }
  }
  EXPECT_EQ(timelines, 4u * 3u);

  // speedup table: header + one row per cell
  const std::string speedup = read_file(dir / "speedup.csv");
  EXPECT_EQ(std::count(speedup.begin(), speedup.end(), '\n'), 1 + 12);
  EXPECT_NE(speedup.find("speedup_vs_baseline_cpu"), std::string::npos);

  // BaselineCPU rows must report speedup exactly 1
  std::istringstream lines(speedup);
  std::string line;
  std::getline(lines, line);  // header
  std::size_t baseline_rows = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("BaselineCPU,", 0) == 0) {
      ++baseline_rows;
      EXPECT_EQ(line.substr(line.rfind(',') + 1), "1");
    }
  }
  EXPECT_EQ(baseline_rows, 3u);
}

TEST(Commands, RunIsDeterministic) {
  const auto dir_a = temp_dir("tc_run_a");
  const auto dir_b = temp_dir("tc_run_b");
  auto ja = small_model_config(dir_a);
  auto jb = small_model_config(dir_b);
  std::ostringstream out_a, out_b;
  ASSERT_EQ(ex::cmd_run(ex::parse_config(ja), out_a), 0);
  ASSERT_EQ(ex::cmd_run(ex::parse_config(jb), out_b), 0);
  EXPECT_EQ(out_a.str(), out_b.str());
  EXPECT_EQ(read_file(dir_a / "speedup.csv"), read_file(dir_b / "speedup.csv"));
  EXPECT_EQ(read_file(dir_a / "breakdown.csv"),
            read_file(dir_b / "breakdown.csv"));
}

TEST(Commands, CastWorkedExampleFiles) {
  const auto dir = temp_dir("tc_cast");
  const auto in = dir / "pairs.csv";
  const auto out_path = dir / "casted.csv";
  {
    std::ofstream f(in);
    f << "src,dst\n1,0\n2,0\n4,0\n0,1\n2,1\n";
  }
  std::ostringstream out;
  EXPECT_EQ(ex::cmd_cast(in.string(), out_path.string(), out), 0);
  EXPECT_EQ(read_file(out_path), "casted_src,casted_dst\n1,0\n0,1\n0,2\n1,2\n0,3\n");
  EXPECT_EQ(read_file(dir / "casted.unique_rows.csv"), "row_id\n0\n1\n2\n4\n");

  const auto empty = dir / "empty.csv";
  { std::ofstream f(empty); }
  EXPECT_THROW(ex::cmd_cast(empty.string(), out_path.string(), out),
               std::invalid_argument);
}

TEST(Commands, SimulateAndGenWorkload) {
  const auto dir = temp_dir("tc_sim");
  auto cfg = ex::parse_config(small_model_config(dir));
  std::ostringstream out;
  EXPECT_EQ(ex::cmd_simulate(cfg, out), 0);
  EXPECT_NE(out.str().find("effective_bw_gbps="), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "rank_accesses.csv"));

  const auto dir2 = temp_dir("tc_gen");
  auto cfg2 = ex::parse_config(small_model_config(dir2));
  std::ostringstream out2;
  EXPECT_EQ(ex::cmd_gen_workload(cfg2, out2), 0);
  EXPECT_TRUE(std::filesystem::exists(dir2 / "table_0.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir2 / "table_1.csv"));

  // generated tables feed straight back into the cast command
  std::ostringstream out3;
  EXPECT_EQ(ex::cmd_cast((dir2 / "table_0.csv").string(),
                         (dir2 / "casted_0.csv").string(), out3),
            0);
}

}  // namespace
