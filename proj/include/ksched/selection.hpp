// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//
// Sensor selection policies for one time step: classical greedy, randomized
// greedy (uniform sampling without replacement), uniform random and
// exhaustive enumeration.
//
// All argmax scans break ties toward the lowest sensor index, so greedy is
// deterministic and randomized greedy with epsilon = e^{-K} reproduces it
// exactly.
//

#pragma once

#include "ksched/common.hpp"
#include "ksched/objective.hpp"
#include "ksched/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace ksched {

struct SelectionResult {
  IndexList selected;
  double f_final = 0.0;
  double mse = 0.0;
  std::int64_t gain_evals = 0;
  double wall_time = 0.0;
  // Randomized greedy with ratio tracing only: eta_i = f_{rg}(S_i) / f_g(S_i).
  std::vector<double> gain_ratio_trace;
  std::vector<int> sample_sizes;
};

// s = ceil((n / K) ln(1 / epsilon)).
inline int nominal_sample_size(int n, int K, double epsilon) {
  const double raw = std::ceil(static_cast<double>(n) / K * std::log(1.0 / epsilon));
  if (raw >= n) return n;
  return std::max(1, static_cast<int>(raw));
}

struct SamplingConfig {
  double epsilon = 0.001;
  // Opt-in: also scan every remaining sensor each iteration to record eta.
  // Doubles the evaluation cost.
  bool trace_gain_ratio = false;

  void validate(int K) const {
    // Relative slack so that epsilon = std::exp(-K) is always accepted.
    const double lower = std::exp(-static_cast<double>(K));
    if (!(epsilon >= lower * (1.0 - 1e-12)) || !(epsilon < 1.0)) {
      throw ParameterError("epsilon must lie in [e^{-K}, 1), got " + std::to_string(epsilon));
    }
  }

  // Sample size at iteration i, clamped to the remaining pool n - i.
  int sample_size(int n, int K, int iteration) const {
    return std::clamp(nominal_sample_size(n, K, epsilon), 1, n - iteration);
  }
};

namespace detail {

inline void check_budget(int n, int K) {
  if (K < 0 || K > n) throw ParameterError("budget K must satisfy 0 <= K <= n");
}

inline void finish(SelectionResult& result, const FisherState& state, const Stopwatch& timer) {
  result.selected = state.selected();
  result.f_final = state.value();
  result.mse = state.mse();
  result.wall_time = timer.seconds();
}

}  // namespace detail

// K passes over all unselected sensors; sum_{i<K}(n - i) gain evaluations.
inline SelectionResult greedy_select(const Matrix& p_pred, StepRows rows, int K) {
  Stopwatch timer;
  const int n = rows.n();
  detail::check_budget(n, K);
  FisherState state(p_pred, rows);
  SelectionResult result;
  Vector work(rows.m());
  for (int i = 0; i < K; ++i) {
    Index best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (state.contains(j)) continue;
      const double g = state.gain_into(j, work);
      ++result.gain_evals;
      if (g > best_gain) {
        best_gain = g;
        best = j;
      }
    }
    state.add(best);
  }
  detail::finish(result, state, timer);
  return result;
}

inline SelectionResult greedy_select(const Matrix& p_pred, const RowMatrix& h, const Vector& r_diag, int K) {
  return greedy_select(p_pred, StepRows(h, r_diag), K);
}

// Randomized greedy. Each iteration draws s candidates uniformly without
// replacement from the unselected sensors (partial Fisher-Yates over the
// pool array), adds the best of them and updates F^{-1} by Sherman-Morrison.
inline SelectionResult randomized_greedy_select(const Matrix& p_pred, StepRows rows, int K,
                                                const SamplingConfig& cfg, Rng& rng) {
  Stopwatch timer;
  const int n = rows.n();
  detail::check_budget(n, K);
  if (K == 0) {
    SelectionResult empty;
    detail::finish(empty, FisherState(p_pred, rows), timer);
    return empty;
  }
  cfg.validate(K);
  FisherState state(p_pred, rows);
  SelectionResult result;
  result.sample_sizes.reserve(static_cast<std::size_t>(K));
  IndexList pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  Vector work(rows.m());

  for (int i = 0; i < K; ++i) {
    const int remaining = static_cast<int>(pool.size());
    const int s = cfg.sample_size(n, K, i);
    for (int t = 0; t < s; ++t) {
      const auto pick = t + static_cast<int>(rng.below(static_cast<std::uint64_t>(remaining - t)));
      std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(pick)]);
    }

    int best_slot = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < s; ++t) {
      const Index j = pool[static_cast<std::size_t>(t)];
      const double g = state.gain_into(j, work);
      ++result.gain_evals;
      if (g > best_gain || (g == best_gain && j < pool[static_cast<std::size_t>(best_slot)])) {
        best_gain = g;
        best_slot = t;
      }
    }
    result.sample_sizes.push_back(s);

    if (cfg.trace_gain_ratio) {
      double full_best = 0.0;
      for (int t = 0; t < remaining; ++t) {
        full_best = std::max(full_best, state.gain_into(pool[static_cast<std::size_t>(t)], work));
      }
      result.gain_ratio_trace.push_back(full_best > 0.0 ? best_gain / full_best : 1.0);
    }

    const Index chosen = pool[static_cast<std::size_t>(best_slot)];
    state.add(chosen);
    pool[static_cast<std::size_t>(best_slot)] = pool.back();
    pool.pop_back();
  }
  detail::finish(result, state, timer);
  return result;
}

inline SelectionResult randomized_greedy_select(const Matrix& p_pred, const RowMatrix& h, const Vector& r_diag,
                                                int K, const SamplingConfig& cfg, Rng& rng) {
  return randomized_greedy_select(p_pred, StepRows(h, r_diag), K, cfg, rng);
}

// Closed-form evaluation counts.
inline std::int64_t greedy_eval_count(int n, int K) {
  return static_cast<std::int64_t>(n) * K - static_cast<std::int64_t>(K) * (K - 1) / 2;
}

inline std::int64_t randomized_eval_count(int n, int K, double epsilon) {
  const int s = nominal_sample_size(n, K, epsilon);
  std::int64_t total = 0;
  for (int i = 0; i < K; ++i) total += std::min(s, n - i);
  return total;
}

// Uniform K-subset without replacement, returned in ascending order; f and
// MSE are evaluated afterwards.
inline IndexList random_subset(int n, int K, Rng& rng) {
  detail::check_budget(n, K);
  IndexList pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int t = 0; t < K; ++t) {
    const auto pick = t + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - t)));
    std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(pick)]);
  }
  pool.resize(static_cast<std::size_t>(K));
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline SelectionResult random_select(const Matrix& p_pred, StepRows rows, int K, Rng& rng) {
  Stopwatch timer;
  SelectionResult result;
  const IndexList subset = random_subset(rows.n(), K, rng);
  FisherState state = make_state(p_pred, rows, subset);
  result.gain_evals = 0;
  detail::finish(result, state, timer);
  return result;
}

// Every sensor, in index order.
inline SelectionResult all_select(const Matrix& p_pred, StepRows rows) {
  Stopwatch timer;
  SelectionResult result;
  IndexList all(static_cast<std::size_t>(rows.n()));
  std::iota(all.begin(), all.end(), 0);
  FisherState state = make_state(p_pred, rows, all);
  detail::finish(result, state, timer);
  return result;
}

// Tr((P^{-1} + sum_{j in S} h_j h_j^T / sigma_j^2)^{-1}) by dense Cholesky
// inversion. Independent of the rank-one recursion.
inline double direct_mse(const Matrix& p_pred_inv, StepRows rows, const IndexList& subset) {
  Matrix fisher = p_pred_inv;
  for (Index j : subset) {
    const auto h = rows.row(j);
    fisher.noalias() += (h / rows.variance(j)) * h.transpose();
  }
  return spd_inverse(fisher, "Fisher matrix").trace();
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

inline constexpr double kDefaultEnumerationCap = 2e6;

// Full enumeration of K-subsets in lexicographic order; each subset's MSE
// comes from a direct dense inversion. Ties keep the lexicographically first
// subset.
inline SelectionResult exhaustive_select(const Matrix& p_pred, StepRows rows, int K,
                                         double cap = kDefaultEnumerationCap) {
  Stopwatch timer;
  const int n = rows.n();
  detail::check_budget(n, K);
  const double count = binomial(n, K);
  if (count > cap) {
    throw CapExceededError("exhaustive search over " + std::to_string(static_cast<long long>(count)) +
                               " subsets exceeds the cap",
                           count);
  }
  const Matrix p_inv = spd_inverse(p_pred, "P_pred");
  const double trace_p = p_pred.trace();

  SelectionResult result;
  IndexList combo(static_cast<std::size_t>(K));
  std::iota(combo.begin(), combo.end(), 0);
  IndexList best = combo;
  double best_f = -std::numeric_limits<double>::infinity();
  double best_mse = 0.0;
  for (;;) {
    const double mse = direct_mse(p_inv, rows, combo);
    ++result.gain_evals;
    const double f = trace_p - mse;
    if (f > best_f) {
      best_f = f;
      best_mse = mse;
      best = combo;
    }
    // Next combination in lexicographic order.
    int pos = K - 1;
    while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == n - K + pos) --pos;
    if (pos < 0) break;
    ++combo[static_cast<std::size_t>(pos)];
    for (int t = pos + 1; t < K; ++t) combo[static_cast<std::size_t>(t)] = combo[static_cast<std::size_t>(t - 1)] + 1;
  }
  result.selected = best;
  result.f_final = K == 0 ? 0.0 : best_f;
  result.mse = K == 0 ? trace_p : best_mse;
  result.wall_time = timer.seconds();
  return result;
}

// ---------------------------------------------------------------------------
// Sampling-hit probability: Pr{R intersects O \ S} for a uniform s-subset R
// of [n] \ S.

// Monte-Carlo estimate. `optimal` and `selected` are index sets over [n].
inline double sampling_hit_rate(int n, int s, const IndexList& optimal, const IndexList& selected,
                                std::int64_t trials, Rng& rng) {
  if (trials < 1) throw ParameterError("trials must be >= 1");
  std::vector<char> in_selected(static_cast<std::size_t>(n), 0);
  for (Index j : selected) in_selected[static_cast<std::size_t>(j)] = 1;
  std::vector<char> target(static_cast<std::size_t>(n), 0);
  for (Index j : optimal)
    if (!in_selected[static_cast<std::size_t>(j)]) target[static_cast<std::size_t>(j)] = 1;

  IndexList pool;
  for (Index j = 0; j < n; ++j)
    if (!in_selected[static_cast<std::size_t>(j)]) pool.push_back(j);
  const int size = static_cast<int>(pool.size());
  s = std::clamp(s, 1, size);

  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    bool hit = false;
    for (int i = 0; i < s; ++i) {
      const auto pick = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick)]);
      if (target[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])]) hit = true;
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

// Exact value 1 - C(N - r, s) / C(N, s) for a pool of N candidates of which
// r are targets.
inline double hit_probability_exact(int pool_size, int targets, int s) {
  if (targets <= 0) return 0.0;
  if (s >= pool_size - targets + 1) return 1.0;
  // C(N - r, s) / C(N, s) = prod_{l<s} (N - r - l) / (N - l)
  double miss = 1.0;
  for (int l = 0; l < s; ++l) miss *= static_cast<double>(pool_size - targets - l) / (pool_size - l);
  return 1.0 - miss;
}

}  // namespace ksched
