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
// Sparse optimizers over coalesced gradients. The adaptive rules are, per
// element, with post-update accumulator A:
//   Adagrad:  A += G^2;              W -= lr * G / sqrt(eps + A)
//   RMSprop:  A = g*A + (1-g)*G^2;   W -= lr * G / sqrt(eps + A)
// This is exactly why gradients must be coalesced first: duplicate lookups
// fed through these rules one at a time give a different W than the
// accumulated gradient does.

#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>

#include "tensorcast/types.hpp"

namespace tensorcast::optim {

enum class OptimizerKind : int { SGD, Adagrad, RMSprop };

inline const char* kind_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::SGD: return "sgd";
    case OptimizerKind::Adagrad: return "adagrad";
    case OptimizerKind::RMSprop: return "rmsprop";
  }
  return "unknown";
}

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::SGD;
  double lr = 0.01;
  double gamma = 0.9;  // RMSprop decay
  double eps = 1e-8;
  RowMatrix accum;     // per-element A, zero-initialized; unused for SGD

  static OptimizerState sgd(double lr) {
    OptimizerState s;
    s.kind = OptimizerKind::SGD;
    s.lr = lr;
    s.validate();
    return s;
  }

  static OptimizerState adagrad(double lr, double eps, std::uint64_t rows,
                                std::uint64_t dim) {
    OptimizerState s;
    s.kind = OptimizerKind::Adagrad;
    s.lr = lr;
    s.eps = eps;
    s.accum = RowMatrix(rows, dim);
    s.validate();
    return s;
  }

  static OptimizerState rmsprop(double lr, double gamma, double eps,
                                std::uint64_t rows, std::uint64_t dim) {
    OptimizerState s;
    s.kind = OptimizerKind::RMSprop;
    s.lr = lr;
    s.gamma = gamma;
    s.eps = eps;
    s.accum = RowMatrix(rows, dim);
    s.validate();
    return s;
  }

  void validate() const {
    if (!(lr > 0)) detail::fail("OptimizerState: lr must be > 0");
    if (!(eps > 0)) detail::fail("OptimizerState: eps must be > 0");
    if (kind == OptimizerKind::RMSprop && !(gamma > 0 && gamma < 1)) {
      detail::fail("OptimizerState: gamma must lie in (0, 1)");
    }
  }
};

namespace detail {

inline void check_rows(const EmbeddingTable& table,
                       const CoalescedGradients& coal, const char* who) {
  if (coal.rows.empty()) {
    tensorcast::detail::fail(std::string(who) + ": empty update set");
  }
  if (coal.grads.dim != table.dim) {
    tensorcast::detail::fail(std::string(who) + ": gradient dim != table dim");
  }
  for (std::size_t u = 0; u < coal.rows.size(); ++u) {
    if (coal.rows[u] >= table.rows) {
      std::ostringstream os;
      os << who << ": rows[" << u << "]=" << coal.rows[u]
         << " out of range (table has " << table.rows << " rows)";
      tensorcast::detail::fail_range(os.str());
    }
  }
}

inline void check_accum(const OptimizerState& state,
                        const EmbeddingTable& table, const char* who) {
  if (state.accum.rows != table.rows || state.accum.dim != table.dim) {
    tensorcast::detail::fail(std::string(who) +
                             ": accumulator shape != table shape");
  }
}

}  // namespace detail

/// Plain SGD, W -= lr * G. No accumulator state.
inline void sgd_step(const OptimizerState& state, EmbeddingTable& table,
                     const CoalescedGradients& coal) {
  detail::check_rows(table, coal, "sgd_step");
  for (std::size_t u = 0; u < coal.rows.size(); ++u) {
    auto w = table.row(coal.rows[u]);
    auto g = coal.grads.row(u);
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = static_cast<float>(w[k] - state.lr * static_cast<double>(g[k]));
    }
  }
}

inline void adagrad_step(OptimizerState& state, EmbeddingTable& table,
                         const CoalescedGradients& coal) {
  if (state.kind != OptimizerKind::Adagrad) {
    tensorcast::detail::fail("adagrad_step: state is not Adagrad");
  }
  detail::check_rows(table, coal, "adagrad_step");
  detail::check_accum(state, table, "adagrad_step");
  for (std::size_t u = 0; u < coal.rows.size(); ++u) {
    auto w = table.row(coal.rows[u]);
    auto a = state.accum.row(coal.rows[u]);
    auto g = coal.grads.row(u);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double ak = static_cast<double>(a[k]) + gk * gk;
      a[k] = static_cast<float>(ak);
      w[k] = static_cast<float>(w[k] - state.lr * gk / std::sqrt(state.eps + ak));
    }
  }
}

inline void rmsprop_step(OptimizerState& state, EmbeddingTable& table,
                         const CoalescedGradients& coal) {
  if (state.kind != OptimizerKind::RMSprop) {
    tensorcast::detail::fail("rmsprop_step: state is not RMSprop");
  }
  detail::check_rows(table, coal, "rmsprop_step");
  detail::check_accum(state, table, "rmsprop_step");
  for (std::size_t u = 0; u < coal.rows.size(); ++u) {
    auto w = table.row(coal.rows[u]);
    auto a = state.accum.row(coal.rows[u]);
    auto g = coal.grads.row(u);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double ak =
          state.gamma * static_cast<double>(a[k]) + (1.0 - state.gamma) * gk * gk;
      a[k] = static_cast<float>(ak);
      w[k] = static_cast<float>(w[k] - state.lr * gk / std::sqrt(state.eps + ak));
    }
  }
}

inline void apply(OptimizerState& state, EmbeddingTable& table,
                  const CoalescedGradients& coal) {
  switch (state.kind) {
    case OptimizerKind::SGD: sgd_step(state, table, coal); return;
    case OptimizerKind::Adagrad: adagrad_step(state, table, coal); return;
    case OptimizerKind::RMSprop: rmsprop_step(state, table, coal); return;
  }
  tensorcast::detail::fail("apply: unknown optimizer kind");
}

}  // namespace tensorcast::optim
