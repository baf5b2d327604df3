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
// Execution-timeline scheduler for one training iteration under four system
// designs. Baselines run gradient expand-coalesce serially in the backward
// pass; the casting designs copy the index array to the GPU and cast it
// there, under the forward embedding gather-reduce, so only
// max(0, copy + cast - forward) of casting latency is ever exposed.

#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tensorcast/types.hpp"

namespace tensorcast::pipeline {

enum class Stage : int {
  FwdEmbGatherReduce,
  FwdMLP,
  BwdMLP,
  Cast,
  ExpandCoalesce,
  CastedGatherReduce,
  Scatter,
  IndexCopy,
};

enum class Resource : int { CPU, GPU, NMP, LINK };

enum class SystemDesign : int { BaselineCPU, BaselineNMP, OursCPU, OursNMP };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::FwdEmbGatherReduce: return "FwdEmbGatherReduce";
    case Stage::FwdMLP: return "FwdMLP";
    case Stage::BwdMLP: return "BwdMLP";
    case Stage::Cast: return "Cast";
    case Stage::ExpandCoalesce: return "ExpandCoalesce";
    case Stage::CastedGatherReduce: return "CastedGatherReduce";
    case Stage::Scatter: return "Scatter";
    case Stage::IndexCopy: return "IndexCopy";
  }
  return "unknown";
}

inline const char* resource_name(Resource r) {
  switch (r) {
    case Resource::CPU: return "CPU";
    case Resource::GPU: return "GPU";
    case Resource::NMP: return "NMP";
    case Resource::LINK: return "LINK";
  }
  return "unknown";
}

inline const char* design_name(SystemDesign d) {
  switch (d) {
    case SystemDesign::BaselineCPU: return "BaselineCPU";
    case SystemDesign::BaselineNMP: return "BaselineNMP";
    case SystemDesign::OursCPU: return "OursCPU";
    case SystemDesign::OursNMP: return "OursNMP";
  }
  return "unknown";
}

inline SystemDesign design_from_name(const std::string& name) {
  for (auto d : {SystemDesign::BaselineCPU, SystemDesign::BaselineNMP,
                 SystemDesign::OursCPU, SystemDesign::OursNMP}) {
    if (name == design_name(d)) return d;
  }
  detail::fail("unknown system design: " + name);
}

inline bool uses_casting(SystemDesign d) {
  return d == SystemDesign::OursCPU || d == SystemDesign::OursNMP;
}

inline bool uses_nmp(SystemDesign d) {
  return d == SystemDesign::BaselineNMP || d == SystemDesign::OursNMP;
}

struct StageSpan {
  Stage stage;
  Resource resource;
  double start = 0.0;
  double duration = 0.0;

  double end() const { return start + duration; }
};

struct Timeline {
  std::vector<StageSpan> spans;
  double iteration_time = 0.0;
};

using StageDurations = std::map<Stage, double>;

namespace detail {

inline double require(const StageDurations& durations, Stage s) {
  auto it = durations.find(s);
  if (it == durations.end()) {
    tensorcast::detail::fail(std::string("schedule: missing duration for stage ") +
                             stage_name(s));
  }
  if (it->second < 0) {
    tensorcast::detail::fail(std::string("schedule: negative duration for stage ") +
                             stage_name(s));
  }
  return it->second;
}

}  // namespace detail

inline Timeline schedule(SystemDesign design, const StageDurations& durations) {
  const Resource emb = uses_nmp(design) ? Resource::NMP : Resource::CPU;

  const double fwd = detail::require(durations, Stage::FwdEmbGatherReduce);
  const double fwd_mlp = detail::require(durations, Stage::FwdMLP);
  const double bwd_mlp = detail::require(durations, Stage::BwdMLP);
  const double scat = detail::require(durations, Stage::Scatter);

  Timeline t;
  t.spans.push_back({Stage::FwdEmbGatherReduce, emb, 0.0, fwd});

  double gpu_free = 0.0;
  double cast_end = 0.0;
  if (uses_casting(design)) {
    const double copy = detail::require(durations, Stage::IndexCopy);
    const double cast = detail::require(durations, Stage::Cast);
    t.spans.push_back({Stage::IndexCopy, Resource::LINK, 0.0, copy});
    t.spans.push_back({Stage::Cast, Resource::GPU, copy, cast});
    cast_end = copy + cast;
    gpu_free = cast_end;
  }

  const double mlp_start = std::max(fwd, gpu_free);
  t.spans.push_back({Stage::FwdMLP, Resource::GPU, mlp_start, fwd_mlp});
  const double bwd_mlp_end = mlp_start + fwd_mlp + bwd_mlp;
  t.spans.push_back({Stage::BwdMLP, Resource::GPU, mlp_start + fwd_mlp, bwd_mlp});

  double bwd_emb_end = 0.0;
  if (uses_casting(design)) {
    const double cgr = detail::require(durations, Stage::CastedGatherReduce);
    const double start = std::max(bwd_mlp_end, cast_end);
    t.spans.push_back({Stage::CastedGatherReduce, emb, start, cgr});
    bwd_emb_end = start + cgr;
  } else {
    const double ec = detail::require(durations, Stage::ExpandCoalesce);
    t.spans.push_back({Stage::ExpandCoalesce, Resource::CPU, bwd_mlp_end, ec});
    bwd_emb_end = bwd_mlp_end + ec;
  }

  t.spans.push_back({Stage::Scatter, emb, bwd_emb_end, scat});

  for (const auto& span : t.spans) {
    t.iteration_time = std::max(t.iteration_time, span.end());
  }
  return t;
}

/// How much faster b's iteration is than a's.
inline double speedup(const Timeline& a, const Timeline& b) {
  if (!(b.iteration_time > 0)) {
    tensorcast::detail::fail("speedup: zero iteration time");
  }
  return a.iteration_time / b.iteration_time;
}

/// Fraction of the iteration during which the NMP unit is busy.
inline double nmp_utilization(const Timeline& t) {
  if (!(t.iteration_time > 0)) return 0.0;
  double busy = 0.0;
  for (const auto& span : t.spans) {
    if (span.resource == Resource::NMP) busy += span.duration;
  }
  return busy / t.iteration_time;
}

inline const char* timeline_csv_header() {
  return "span,name,resource,start,duration";
}

inline std::string timeline_csv(const Timeline& t) {
  std::ostringstream os;
  os << timeline_csv_header() << '\n';
  for (std::size_t i = 0; i < t.spans.size(); ++i) {
    const auto& s = t.spans[i];
    os << i << ',' << stage_name(s.stage) << ',' << resource_name(s.resource)
       << ',' << s.start << ',' << s.duration << '\n';
  }
  return os.str();
}

}  // namespace tensorcast::pipeline
