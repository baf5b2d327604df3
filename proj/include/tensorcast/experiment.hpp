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
// Experiment runner behind the CLI: JSON config, stage-duration derivation
// (traffic totals over host bandwidth for CPU stages, rank-model execution
// for NMP stages), the functional-equivalence harness, and the report
// writers. Commands live here rather than in the tool so tests can drive
// them in-process.

#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tensorcast/csv.hpp"
#include "tensorcast/kernels.hpp"
#include "tensorcast/nmpsim.hpp"
#include "tensorcast/optim.hpp"
#include "tensorcast/pipeline.hpp"
#include "tensorcast/traffic.hpp"
#include "tensorcast/types.hpp"
#include "tensorcast/workload.hpp"

namespace tensorcast::experiment {

using nlohmann::json;

struct BandwidthConfig {
  double host_bw = 80e9;    // CPU memory subsystem, bytes/sec
  double gpu_bw = 900e9;    // GPU HBM, bytes/sec
  double link_bw = 25e9;    // GPU <-> memory-pool link, bytes/sec
  double gpu_flops = 15e12; // dense MLP throughput, flop/sec
  nmp::NmpConfig nmp;
};

struct PipelineKnobs {
  double fwd_mlp_s = -1.0;  // < 0: derive from the model's MLP layer lists
  double bwd_mlp_s = -1.0;
  double coalesce_sort_multiplier = 1.0;  // sort time as a multiple of accu time
  double cast_passes = 4.0;               // sort passes over the (src,dst) pair
};

struct OptimizerConfig {
  optim::OptimizerKind kind = optim::OptimizerKind::Adagrad;
  double lr = 0.01;
  double gamma = 0.9;
  double eps = 1e-8;
};

struct ExperimentConfig {
  workload::ModelConfig model = workload::find_model("RM1");
  std::string dist_kind = "zipf";  // zipf | uniform | histogram
  double zipf_s = 1.05;
  std::string histogram_path;
  std::uint64_t seed = 42;
  std::vector<std::uint64_t> batches;
  std::vector<std::uint64_t> dims;
  std::vector<pipeline::SystemDesign> designs = {
      pipeline::SystemDesign::BaselineCPU, pipeline::SystemDesign::BaselineNMP,
      pipeline::SystemDesign::OursCPU, pipeline::SystemDesign::OursNMP};
  BandwidthConfig bw;
  PipelineKnobs knobs;
  OptimizerConfig opt;
  std::string out_dir = "out";
  std::uint64_t equivalence_instances = 1000;
  std::string config_hash = "default";

  void finalize() {
    if (batches.empty()) batches = {model.batch};
    if (dims.empty()) dims = {model.dim};
    if (designs.empty()) detail::fail("config: at least one design required");
  }
};

namespace detail {

using tensorcast::detail::fail;

inline std::string hash_hex(const std::string& s) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0')
     << std::hash<std::string>{}(s);
  return os.str();
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.is_string()) {
      cfg.model = workload::find_model(m.get<std::string>());
    } else {
      cfg.model.name = m.value("name", std::string("custom"));
      cfg.model.num_tables = m.value("num_tables", std::uint64_t{1});
      cfg.model.gathers_per_table =
          m.value("gathers_per_table", std::uint64_t{1});
      cfg.model.table_rows = m.value("table_rows", std::uint64_t{1'000'000});
      cfg.model.dim = m.value("dim", std::uint64_t{64});
      cfg.model.batch = m.value("batch", std::uint64_t{2048});
      cfg.model.bottom_mlp =
          m.value("bottom_mlp", std::vector<std::uint64_t>{});
      cfg.model.top_mlp = m.value("top_mlp", std::vector<std::uint64_t>{});
    }
  }
  if (j.contains("table_rows")) {
    cfg.model.table_rows = j.at("table_rows").get<std::uint64_t>();
  }
  if (j.contains("distribution")) {
    const auto& d = j.at("distribution");
    cfg.dist_kind = d.value("kind", std::string("zipf"));
    cfg.zipf_s = d.value("s", 1.05);
    cfg.histogram_path = d.value("path", std::string());
  }
  cfg.seed = j.value("seed", std::uint64_t{42});
  cfg.batches = j.value("batches", std::vector<std::uint64_t>{});
  cfg.dims = j.value("dims", std::vector<std::uint64_t>{});
  if (j.contains("designs")) {
    cfg.designs.clear();
    for (const auto& name : j.at("designs")) {
      cfg.designs.push_back(
          pipeline::design_from_name(name.get<std::string>()));
    }
  }
  if (j.contains("bandwidth")) {
    const auto& b = j.at("bandwidth");
    cfg.bw.host_bw = b.value("host_bw", cfg.bw.host_bw);
    cfg.bw.gpu_bw = b.value("gpu_bw", cfg.bw.gpu_bw);
    cfg.bw.link_bw = b.value("link_bw", cfg.bw.link_bw);
    cfg.bw.gpu_flops = b.value("gpu_flops", cfg.bw.gpu_flops);
    if (b.contains("nmp")) {
      const auto& n = b.at("nmp");
      cfg.bw.nmp.num_ranks = n.value("ranks", cfg.bw.nmp.num_ranks);
      cfg.bw.nmp.rank_bw = n.value("rank_bw", cfg.bw.nmp.rank_bw);
      cfg.bw.nmp.access_granularity =
          n.value("granularity", cfg.bw.nmp.access_granularity);
      cfg.bw.nmp.dispatch_latency =
          n.value("dispatch_latency", cfg.bw.nmp.dispatch_latency);
    }
  }
  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    cfg.knobs.fwd_mlp_s = p.value("fwd_mlp_s", cfg.knobs.fwd_mlp_s);
    cfg.knobs.bwd_mlp_s = p.value("bwd_mlp_s", cfg.knobs.bwd_mlp_s);
    cfg.knobs.coalesce_sort_multiplier =
        p.value("coalesce_sort_multiplier", cfg.knobs.coalesce_sort_multiplier);
    cfg.knobs.cast_passes = p.value("cast_passes", cfg.knobs.cast_passes);
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    const std::string kind = o.value("kind", std::string("adagrad"));
    if (kind == "sgd") cfg.opt.kind = optim::OptimizerKind::SGD;
    else if (kind == "adagrad") cfg.opt.kind = optim::OptimizerKind::Adagrad;
    else if (kind == "rmsprop") cfg.opt.kind = optim::OptimizerKind::RMSprop;
    else detail::fail("config: unknown optimizer kind: " + kind);
    cfg.opt.lr = o.value("lr", cfg.opt.lr);
    cfg.opt.gamma = o.value("gamma", cfg.opt.gamma);
    cfg.opt.eps = o.value("eps", cfg.opt.eps);
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.equivalence_instances =
      j.value("equivalence_instances", cfg.equivalence_instances);
  cfg.config_hash = detail::hash_hex(j.dump());
  cfg.finalize();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::fail("cannot open config " + path);
  json j;
  in >> j;
  return parse_config(j);
}

inline workload::LookupDistribution make_distribution(
    const ExperimentConfig& cfg) {
  if (cfg.dist_kind == "uniform") {
    return workload::LookupDistribution::uniform(cfg.model.table_rows);
  }
  if (cfg.dist_kind == "zipf") {
    return workload::LookupDistribution::zipf(cfg.zipf_s, cfg.model.table_rows);
  }
  if (cfg.dist_kind == "histogram") {
    if (cfg.histogram_path.empty()) {
      detail::fail("config: histogram distribution needs a path");
    }
    return workload::load_histogram(cfg.histogram_path);
  }
  detail::fail("config: unknown distribution kind: " + cfg.dist_kind);
}

// ---------------------------------------------------------------------------
// Stage durations
// ---------------------------------------------------------------------------

inline double mlp_fwd_seconds(const workload::ModelConfig& model,
                              std::uint64_t batch, double gpu_flops) {
  std::uint64_t macs = 0;
  for (const auto* layers : {&model.bottom_mlp, &model.top_mlp}) {
    for (std::size_t i = 0; i + 1 < layers->size(); ++i) {
      macs += (*layers)[i] * (*layers)[i + 1];
    }
  }
  return 2.0 * static_cast<double>(macs) * static_cast<double>(batch) /
         gpu_flops;
}

/// Both resource variants of every stage for one (model, batch, dim) cell;
/// schedule() picks per design.
struct DerivedDurations {
  double fwd_cpu = 0, fwd_nmp = 0;
  double expand_coalesce_cpu = 0;
  double cgr_cpu = 0, cgr_nmp = 0;
  double scatter_cpu = 0, scatter_nmp = 0;
  double cast = 0, index_copy = 0;
  double fwd_mlp = 0, bwd_mlp = 0;
  std::uint64_t total_lookups = 0;
  std::uint64_t total_unique = 0;

  pipeline::StageDurations for_design(pipeline::SystemDesign d) const {
    using pipeline::Stage;
    const bool nmp = pipeline::uses_nmp(d);
    pipeline::StageDurations out{
        {Stage::FwdEmbGatherReduce, nmp ? fwd_nmp : fwd_cpu},
        {Stage::FwdMLP, fwd_mlp},
        {Stage::BwdMLP, bwd_mlp},
        {Stage::Scatter, nmp ? scatter_nmp : scatter_cpu},
    };
    if (pipeline::uses_casting(d)) {
      out[Stage::IndexCopy] = index_copy;
      out[Stage::Cast] = cast;
      out[Stage::CastedGatherReduce] = nmp ? cgr_nmp : cgr_cpu;
    } else {
      out[Stage::ExpandCoalesce] = expand_coalesce_cpu;
    }
    return out;
  }
};

inline DerivedDurations derive_durations(
    const ExperimentConfig& cfg, const std::vector<LookupIndex>& indices,
    std::uint64_t batch, std::uint64_t dim) {
  DerivedDurations d;
  const auto& bw = cfg.bw;

  std::vector<nmp::NmpInstruction> fwd_stream, cgr_stream, scat_stream;
  fwd_stream.reserve(indices.size());
  cgr_stream.reserve(indices.size());
  scat_stream.reserve(indices.size());

  const std::uint64_t vec_bytes = dim * 4;
  for (std::size_t t = 0; t < indices.size(); ++t) {
    const LookupIndex& idx = indices[t];
    const CastedIndex cast = kernels::tensor_casting(idx);
    traffic::TrafficParams p;
    p.lookups = idx.size();
    p.outputs = batch;
    p.unique_rows = cast.num_unique();
    p.dim = dim;
    d.total_lookups += p.lookups;
    d.total_unique += p.unique_rows;

    d.fwd_cpu += traffic::gather_reduce(p).total() / bw.host_bw;
    d.expand_coalesce_cpu +=
        (traffic::expand(p).total() +
         traffic::coalesce(p).total() *
             (1.0 + cfg.knobs.coalesce_sort_multiplier)) /
        bw.host_bw;
    d.cgr_cpu += traffic::casted_gather_reduce(p).total() / bw.host_bw;
    d.scatter_cpu += traffic::scatter(p).total() / bw.host_bw;

    fwd_stream.push_back({nmp::NmpOp::GatherReduce, t, idx.src, idx.dst,
                          vec_bytes});
    cgr_stream.push_back({nmp::NmpOp::GatherReduce, t, cast.casted_src,
                          cast.casted_dst, vec_bytes});
    scat_stream.push_back({nmp::NmpOp::Scatter, t, cast.unique_rows, {},
                           vec_bytes});
  }

  d.fwd_nmp = nmp::execute(fwd_stream, bw.nmp).elapsed;
  d.cgr_nmp = nmp::execute(cgr_stream, bw.nmp).elapsed;
  d.scatter_nmp = nmp::execute(scat_stream, bw.nmp).elapsed;

  const double index_bytes = static_cast<double>(2 * d.total_lookups * 8);
  d.index_copy = index_bytes / bw.link_bw;
  d.cast = cfg.knobs.cast_passes * 2.0 * index_bytes / bw.gpu_bw;

  d.fwd_mlp = cfg.knobs.fwd_mlp_s >= 0
                  ? cfg.knobs.fwd_mlp_s
                  : mlp_fwd_seconds(cfg.model, batch, bw.gpu_flops);
  d.bwd_mlp = cfg.knobs.bwd_mlp_s >= 0 ? cfg.knobs.bwd_mlp_s : 2.0 * d.fwd_mlp;
  return d;
}

// ---------------------------------------------------------------------------
// Functional equivalence harness
// ---------------------------------------------------------------------------

struct EquivalenceOptions {
  std::uint64_t instances = 1000;
  std::uint64_t seed = 42;
  bool inject_fault = false;  // corrupts one casted_dst entry, for testing
};

struct EquivalenceReport {
  std::uint64_t instances_run = 0;
  double max_rel_error = 0.0;
  bool golden_ok = false;
  bool passed = false;
  std::uint64_t failing_seed = 0;
  std::string failure;
};

namespace detail {

inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-30});
  return std::abs(a - b) / denom;
}

/// Small duplicate-heavy random instance: table <= 64 rows, dim <= 8,
/// L <= 256.
struct RandomInstance {
  EmbeddingTable table;
  LookupIndex idx;
  GradientBatch grad;
};

inline RandomInstance make_instance(std::uint64_t seed) {
  std::mt19937_64 rng(workload::detail::mix64(seed));
  auto uniform = [&](std::uint64_t lo, std::uint64_t hi) {
    return lo + rng() % (hi - lo + 1);
  };
  RandomInstance inst;
  const std::uint64_t rows = uniform(1, 64);
  const std::uint64_t dim = uniform(1, 8);
  const std::uint64_t outputs = uniform(1, 16);
  const std::uint64_t gathers = uniform(1, 16);

  inst.table = EmbeddingTable(rows, dim);
  for (auto& v : inst.table.data) {
    v = static_cast<float>(workload::detail::canonical(rng) * 2.0 - 1.0);
  }
  // draws concentrated on few rows so coalescing has real work to do
  const std::uint64_t hot = std::max<std::uint64_t>(1, rows / 4);
  inst.idx.num_outputs = outputs;
  for (std::uint64_t b = 0; b < outputs; ++b) {
    for (std::uint64_t g = 0; g < gathers; ++g) {
      const bool pick_hot = (rng() % 4) != 0;
      inst.idx.src.push_back(pick_hot ? uniform(0, hot - 1)
                                      : uniform(0, rows - 1));
      inst.idx.dst.push_back(b);
    }
  }
  inst.grad = GradientBatch(outputs, dim);
  for (auto& v : inst.grad.data) {
    v = static_cast<float>(workload::detail::canonical(rng) * 2.0 - 1.0);
  }
  return inst;
}

}  // namespace detail

inline EquivalenceReport run_equivalence(const EquivalenceOptions& opts,
                                         const OptimizerConfig& opt_cfg = {}) {
  EquivalenceReport rep;

  // Golden case first: the worked (src, dst) permutation example.
  {
    LookupIndex idx{{1, 2, 4, 0, 2}, {0, 0, 0, 1, 1}, 2};
    const CastedIndex cast = kernels::tensor_casting(idx);
    rep.golden_ok =
        cast.casted_src == std::vector<SlotId>{1, 0, 0, 1, 0} &&
        cast.casted_dst == std::vector<std::uint64_t>{0, 1, 2, 2, 3} &&
        cast.unique_rows == std::vector<RowId>{0, 1, 2, 4};
    if (!rep.golden_ok) {
      rep.failure = "golden casting example mismatch";
      return rep;
    }
  }

  bool fault_pending = opts.inject_fault;
  for (std::uint64_t i = 0; i < opts.instances; ++i) {
    const std::uint64_t inst_seed = opts.seed + i;
    auto inst = detail::make_instance(inst_seed);

    const RowMatrix expanded = kernels::expand_gradients(inst.grad, inst.idx);
    const CoalescedGradients base =
        kernels::coalesce_gradients(inst.idx, expanded);

    CastedIndex cast = kernels::tensor_casting(inst.idx);
    if (fault_pending && i >= opts.instances / 2 && inst.grad.rows > 1) {
      // redirect one gather to the wrong gradient row; the index stays
      // structurally valid so the value comparison has to catch it
      cast.casted_src[0] = (cast.casted_src[0] + 1) % inst.grad.rows;
      fault_pending = false;
    }
    const CoalescedGradients casted =
        kernels::casted_gather_reduce(cast, inst.grad);

    bool ok = base.rows == casted.rows &&
              base.grads.data.size() == casted.grads.data.size();
    double inst_err = 0.0;
    if (ok) {
      for (std::size_t k = 0; k < base.grads.data.size(); ++k) {
        inst_err = std::max(
            inst_err, detail::rel_err(base.grads.data[k], casted.grads.data[k]));
      }
      ok = inst_err <= 1e-6;
    }

    // Same optimizer step through both routes must land on the same table.
    if (ok) {
      EmbeddingTable table_a = inst.table;
      EmbeddingTable table_b = inst.table;
      auto make_state = [&](const EmbeddingTable& t) {
        switch (opt_cfg.kind) {
          case optim::OptimizerKind::SGD:
            return optim::OptimizerState::sgd(opt_cfg.lr);
          case optim::OptimizerKind::Adagrad:
            return optim::OptimizerState::adagrad(opt_cfg.lr, opt_cfg.eps,
                                                  t.rows, t.dim);
          case optim::OptimizerKind::RMSprop:
            return optim::OptimizerState::rmsprop(
                opt_cfg.lr, opt_cfg.gamma, opt_cfg.eps, t.rows, t.dim);
        }
        tensorcast::detail::fail("unknown optimizer kind");
      };
      auto state_a = make_state(table_a);
      auto state_b = make_state(table_b);
      optim::apply(state_a, table_a, base);
      optim::apply(state_b, table_b, casted);
      for (std::size_t k = 0; ok && k < table_a.data.size(); ++k) {
        ok = detail::rel_err(table_a.data[k], table_b.data[k]) <= 1e-6;
      }
    }

    rep.max_rel_error = std::max(rep.max_rel_error, inst_err);
    ++rep.instances_run;
    if (!ok) {
      rep.failing_seed = inst_seed;
      std::ostringstream os;
      os << "equivalence mismatch at seed " << inst_seed;
      rep.failure = os.str();
      return rep;
    }
  }
  rep.passed = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t env_thread_cap() {
  if (const char* env = std::getenv("TENSORCAST_THREADS")) {
    const std::uint64_t n = std::strtoull(env, nullptr, 10);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

template <typename Fn>
void parallel_for(std::uint64_t count, Fn&& fn) {
  const std::uint64_t threads = std::min<std::uint64_t>(env_thread_cap(), count);
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::uint64_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::uint64_t i = next.fetch_add(1); i < count;
           i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

inline void write_manifest(const ExperimentConfig& cfg,
                           const std::string& command) {
  json m;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["config_hash"] = cfg.config_hash;
  m["model"] = cfg.model.name;
  csv::write_file((std::filesystem::path(cfg.out_dir) / "manifest.json").string(),
                  m.dump(2) + "\n");
}

inline std::string sidecar_path(const std::string& out_path,
                                const std::string& tag) {
  const auto dot = out_path.find_last_of('.');
  if (dot == std::string::npos) return out_path + "." + tag;
  return out_path.substr(0, dot) + "." + tag + out_path.substr(dot);
}

}  // namespace detail

/// Per-primitive analytical traffic for the configured instance, one CSV row
/// per primitive, totals summed across tables.
inline int cmd_traffic(const ExperimentConfig& cfg, std::ostream& out) {
  const auto dist = make_distribution(cfg);
  workload::ModelConfig model = cfg.model;
  model.batch = cfg.batches.front();
  model.dim = cfg.dims.front();
  const auto indices = workload::gen_lookups(model, dist, cfg.seed);

  std::map<traffic::Primitive, traffic::TrafficReport> sums;
  for (const auto& idx : indices) {
    traffic::TrafficParams p;
    p.lookups = idx.size();
    p.outputs = model.batch;
    p.unique_rows = kernels::tensor_casting(idx).num_unique();
    p.dim = model.dim;
    for (auto prim :
         {traffic::Primitive::GatherReduce, traffic::Primitive::Expand,
          traffic::Primitive::Coalesce, traffic::Primitive::CastedGatherReduce,
          traffic::Primitive::Scatter}) {
      const auto r = traffic::report_for(prim, p);
      auto& s = sums[prim];
      s.primitive = r.primitive;
      s.bytes_read += r.bytes_read;
      s.bytes_written += r.bytes_written;
      s.index_bytes += r.index_bytes;
    }
  }

  std::ostringstream body;
  body << traffic::traffic_csv_header() << '\n';
  for (const auto& [prim, rep] : sums) body << rep.csv_row() << '\n';
  out << body.str();

  std::filesystem::create_directories(cfg.out_dir);
  csv::write_file(
      (std::filesystem::path(cfg.out_dir) / "traffic.csv").string(),
      body.str());
  detail::write_manifest(cfg, "traffic");
  return 0;
}

struct CellResult {
  std::uint64_t batch = 0;
  std::uint64_t dim = 0;
  DerivedDurations durations;
  std::map<pipeline::SystemDesign, pipeline::Timeline> timelines;
};

/// Timelines and speedups for every (batch, dim) cell. BaselineCPU is always
/// scheduled as the speedup reference even when not requested.
inline std::vector<CellResult> run_cells(const ExperimentConfig& cfg) {
  const auto dist = make_distribution(cfg);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cells;
  for (auto b : cfg.batches) {
    for (auto d : cfg.dims) cells.emplace_back(b, d);
  }

  std::vector<CellResult> results(cells.size());
  detail::parallel_for(cells.size(), [&](std::uint64_t i) {
    const auto [batch, dim] = cells[i];
    workload::ModelConfig model = cfg.model;
    model.batch = batch;
    model.dim = dim;
    const auto indices = workload::gen_lookups(model, dist, cfg.seed);

    CellResult& cell = results[i];
    cell.batch = batch;
    cell.dim = dim;
    cell.durations = derive_durations(cfg, indices, batch, dim);

    auto designs = cfg.designs;
    if (std::find(designs.begin(), designs.end(),
                  pipeline::SystemDesign::BaselineCPU) == designs.end()) {
      designs.push_back(pipeline::SystemDesign::BaselineCPU);
    }
    for (auto design : designs) {
      cell.timelines[design] =
          pipeline::schedule(design, cell.durations.for_design(design));
    }
  });
  return results;
}

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  const auto results = run_cells(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path dir(cfg.out_dir);

  std::ostringstream breakdown;
  breakdown << "design,batch,dim,stage,resource,start,duration\n";
  std::ostringstream speedups;
  speedups << "design,batch,dim,iteration_s,speedup_vs_baseline_cpu\n";

  for (const auto& cell : results) {
    const double base =
        cell.timelines.at(pipeline::SystemDesign::BaselineCPU).iteration_time;
    for (auto design : cfg.designs) {
      const auto& t = cell.timelines.at(design);
      std::ostringstream name;
      name << "timeline_" << pipeline::design_name(design) << "_b"
           << cell.batch << "_d" << cell.dim << ".csv";
      csv::write_file((dir / name.str()).string(), pipeline::timeline_csv(t));

      for (const auto& span : t.spans) {
        breakdown << pipeline::design_name(design) << ',' << cell.batch << ','
                  << cell.dim << ',' << pipeline::stage_name(span.stage) << ','
                  << pipeline::resource_name(span.resource) << ','
                  << span.start << ',' << span.duration << '\n';
      }
      speedups << pipeline::design_name(design) << ',' << cell.batch << ','
               << cell.dim << ',' << t.iteration_time << ','
               << base / t.iteration_time << '\n';
    }
  }

  csv::write_file((dir / "breakdown.csv").string(), breakdown.str());
  csv::write_file((dir / "speedup.csv").string(), speedups.str());
  detail::write_manifest(cfg, "run");
  out << speedups.str();
  return 0;
}

inline int cmd_equivalence(const ExperimentConfig& cfg, std::ostream& out,
                           bool inject_fault = false) {
  EquivalenceOptions opts;
  opts.instances = cfg.equivalence_instances;
  opts.seed = cfg.seed;
  opts.inject_fault = inject_fault;
  const EquivalenceReport rep = run_equivalence(opts, cfg.opt);

  out << "equivalence: golden=" << (rep.golden_ok ? "ok" : "FAIL")
      << " instances=" << rep.instances_run
      << " max_rel_error=" << rep.max_rel_error << " seed=" << cfg.seed
      << " config=" << cfg.config_hash << '\n';
  if (!rep.passed) {
    out << "equivalence: FAILED (" << rep.failure << ")\n";
    return 1;
  }
  out << "equivalence: PASS\n";
  return 0;
}

/// Reads `src,dst` pairs, writes the casted pair plus a unique-rows sidecar.
inline int cmd_cast(const std::string& in_path, const std::string& out_path,
                    std::ostream& out) {
  const csv::U64Pairs pairs = csv::load_u64_pairs(in_path);
  LookupIndex idx;
  idx.src = pairs.first;
  idx.dst = pairs.second;
  idx.num_outputs =
      *std::max_element(idx.dst.begin(), idx.dst.end()) + 1;

  const CastedIndex cast = kernels::tensor_casting(idx);

  std::ostringstream body;
  body << "casted_src,casted_dst\n";
  for (std::size_t i = 0; i < cast.size(); ++i) {
    body << cast.casted_src[i] << ',' << cast.casted_dst[i] << '\n';
  }
  csv::write_file(out_path, body.str());

  std::ostringstream side;
  side << "row_id\n";
  for (auto r : cast.unique_rows) side << r << '\n';
  const std::string side_path = detail::sidecar_path(out_path, "unique_rows");
  csv::write_file(side_path, side.str());

  out << "cast: " << cast.size() << " pairs -> " << cast.num_unique()
      << " unique rows (" << out_path << ", " << side_path << ")\n";
  return 0;
}

/// Standalone rank-model run over a synthetic gather stream.
inline int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto dist = make_distribution(cfg);
  workload::ModelConfig model = cfg.model;
  model.batch = cfg.batches.front();
  model.dim = cfg.dims.front();
  const auto indices = workload::gen_lookups(model, dist, cfg.seed);

  std::vector<nmp::NmpInstruction> stream;
  stream.reserve(indices.size());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    stream.push_back({nmp::NmpOp::GatherReduce, t, indices[t].src,
                      indices[t].dst, model.dim * 4});
  }
  const nmp::NmpResult res = nmp::execute(stream, cfg.bw.nmp);

  std::ostringstream body;
  body << "rank,accesses\n";
  for (std::size_t r = 0; r < res.per_rank_accesses.size(); ++r) {
    body << r << ',' << res.per_rank_accesses[r] << '\n';
  }
  std::filesystem::create_directories(cfg.out_dir);
  csv::write_file(
      (std::filesystem::path(cfg.out_dir) / "rank_accesses.csv").string(),
      body.str());
  detail::write_manifest(cfg, "simulate");

  out << "simulate: elapsed_s=" << res.elapsed
      << " effective_bw_gbps=" << res.effective_bw / 1e9
      << " bottleneck_rank=" << res.bottleneck_rank << '\n';
  return 0;
}

/// Writes the generated per-table (src, dst) streams as CSV files.
inline int cmd_gen_workload(const ExperimentConfig& cfg, std::ostream& out) {
  const auto dist = make_distribution(cfg);
  workload::ModelConfig model = cfg.model;
  model.batch = cfg.batches.front();
  model.dim = cfg.dims.front();
  const auto indices = workload::gen_lookups(model, dist, cfg.seed);

  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path dir(cfg.out_dir);
  for (std::size_t t = 0; t < indices.size(); ++t) {
    std::ostringstream body;
    body << "src,dst\n";
    for (std::size_t i = 0; i < indices[t].size(); ++i) {
      body << indices[t].src[i] << ',' << indices[t].dst[i] << '\n';
    }
    std::ostringstream name;
    name << "table_" << t << ".csv";
    csv::write_file((dir / name.str()).string(), body.str());
  }
  detail::write_manifest(cfg, "gen-workload");
  out << "gen-workload: wrote " << indices.size() << " tables to "
      << cfg.out_dir << '\n';
  return 0;
}

}  // namespace tensorcast::experiment
