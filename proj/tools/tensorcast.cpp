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
// tensorcast — embedding-training primitive harness and performance model.
//
//   tensorcast equivalence --config cfg.json [--seed N] [--instances N]
//   tensorcast run         --config cfg.json [--seed N] [--out DIR]
//   tensorcast traffic     --config cfg.json [--out DIR]
//   tensorcast cast        --in pairs.csv --out casted.csv
//   tensorcast simulate    --config cfg.json [--out DIR]
//   tensorcast gen-workload --config cfg.json [--out DIR]
//
// TENSORCAST_THREADS caps how many (batch, dim) cells run in parallel.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tensorcast/experiment.hpp"

namespace {

using tensorcast::experiment::ExperimentConfig;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    cfg = tensorcast::experiment::load_config(args.config_path);
  } else {
    cfg.finalize();
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path,
                              "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t s) { args.seed = s; },
      "override the config seed");
  cmd->add_option_function<std::string>(
      "--out", [&args](std::string d) { args.out_dir = std::move(d); },
      "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedding-training primitives, traffic model and "
               "system-design timeline simulator"};
  app.require_subcommand(1);

  CommonArgs eq_args, run_args, traffic_args, sim_args, gen_args;
  std::uint64_t eq_instances = 0;
  bool eq_inject_fault = false;
  std::string cast_in, cast_out;

  auto* eq = app.add_subcommand(
      "equivalence", "validate casted gather-reduce against expand-coalesce");
  add_common(eq, eq_args, false);
  eq->add_option("--instances", eq_instances, "random instances to run");
  eq->add_flag("--inject-fault", eq_inject_fault)->group("");  // for testing

  auto* run = app.add_subcommand(
      "run", "schedule all configured (design, batch, dim) cells");
  add_common(run, run_args, true);

  auto* traffic = app.add_subcommand(
      "traffic", "emit per-primitive analytical traffic reports");
  add_common(traffic, traffic_args, false);

  auto* cast = app.add_subcommand("cast", "cast a (src, dst) index file");
  cast->add_option("--in", cast_in, "input CSV of src,dst pairs")->required();
  cast->add_option("--out", cast_out, "output CSV of casted pairs")->required();

  auto* sim = app.add_subcommand(
      "simulate", "run the rank-level near-memory timing model standalone");
  add_common(sim, sim_args, false);

  auto* gen = app.add_subcommand(
      "gen-workload", "write generated per-table (src, dst) streams");
  add_common(gen, gen_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (eq->parsed()) {
      auto cfg = resolve_config(eq_args);
      if (eq_instances > 0) cfg.equivalence_instances = eq_instances;
      return tensorcast::experiment::cmd_equivalence(cfg, std::cout,
                                                     eq_inject_fault);
    }
    if (run->parsed()) {
      return tensorcast::experiment::cmd_run(resolve_config(run_args),
                                             std::cout);
    }
    if (traffic->parsed()) {
      return tensorcast::experiment::cmd_traffic(resolve_config(traffic_args),
                                                 std::cout);
    }
    if (cast->parsed()) {
      return tensorcast::experiment::cmd_cast(cast_in, cast_out, std::cout);
    }
    if (sim->parsed()) {
      return tensorcast::experiment::cmd_simulate(resolve_config(sim_args),
                                                  std::cout);
    }
    if (gen->parsed()) {
      return tensorcast::experiment::cmd_gen_workload(resolve_config(gen_args),
                                                      std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
