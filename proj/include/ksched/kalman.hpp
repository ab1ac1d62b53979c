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
// Kalman filtering with a per-step sensor subset.
//
// The filtered covariance is the inverse Fisher matrix of the selected rows,
//   P_{k|k} = (P_{k|k-1}^{-1} + H_S^T R_S^{-1} H_S)^{-1},
// built by the rank-one chain of FisherState. The mean uses the innovation
// form x = x_pred + P_{k|k} H_S^T R_S^{-1} (y_S - H_S x_pred), which keeps the
// prior-mean term.
//

#pragma once

#include "ksched/common.hpp"
#include "ksched/model.hpp"
#include "ksched/objective.hpp"
#include "ksched/rng.hpp"
#include "ksched/selection.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ksched {

struct FilterState {
  Vector x_hat;
  Matrix P_filt;
  int k = -1;
};

struct Prediction {
  Vector x_pred;
  Matrix P_pred;
};

inline Prediction predict(const FilterState& state, const Matrix& A, const Matrix& Q) {
  const auto m = state.x_hat.size();
  if (A.rows() != m || A.cols() != m || Q.rows() != m || Q.cols() != m || state.P_filt.rows() != m) {
    throw ValidationError("predict: dimension mismatch");
  }
  Prediction out;
  out.x_pred = A * state.x_hat;
  out.P_pred = A * state.P_filt * A.transpose() + Q;
  symmetrize(out.P_pred);
  return out;
}

struct UpdateResult {
  FilterState state;
  // Empty selection: the measurement update was skipped.
  bool predict_only = false;
};

// `y` holds one entry per sensor row of H_k; only the selected entries are
// read.
inline UpdateResult update(const Vector& x_pred, const Matrix& P_pred, const IndexList& selection, StepRows rows,
                           const Vector& y, int k = 0) {
  UpdateResult out;
  out.state.k = k;
  if (selection.empty()) {
    out.state.x_hat = x_pred;
    out.state.P_filt = P_pred;
    out.predict_only = true;
    return out;
  }
  if (y.size() != rows.n()) throw ValidationError("update: y must have one entry per sensor");
  // A non-PD prior aborts here rather than being regularized.
  Eigen::LLT<Matrix> prior(P_pred);
  if (prior.info() != Eigen::Success) throw ValidationError("P_pred is not positive definite");

  FisherState fisher = make_state(P_pred, rows, selection);
  Vector info = Vector::Zero(x_pred.size());
  for (Index j : selection) {
    const auto h = rows.row(j);
    info += h * ((y(j) - h.dot(x_pred)) / rows.variance(j));
  }
  out.state.P_filt = fisher.inverse_fisher();
  out.state.x_hat = x_pred + out.state.P_filt * info;
  return out;
}

// ---------------------------------------------------------------------------
// Policies and trajectories.

enum class PolicyKind { kGreedy, kRandomized, kRandom, kExhaustive, kAll };

struct PolicySpec {
  PolicyKind kind = PolicyKind::kGreedy;
  double epsilon = 0.001;
  bool trace_gain_ratio = false;

  std::string name() const {
    switch (kind) {
      case PolicyKind::kGreedy: return "greedy";
      case PolicyKind::kRandomized: return "randomized";
      case PolicyKind::kRandom: return "random";
      case PolicyKind::kExhaustive: return "exhaustive";
      case PolicyKind::kAll: return "all";
    }
    return "unknown";
  }
};

inline PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "greedy") return PolicyKind::kGreedy;
  if (s == "randomized" || s == "randomized-greedy") return PolicyKind::kRandomized;
  if (s == "random") return PolicyKind::kRandom;
  if (s == "exhaustive") return PolicyKind::kExhaustive;
  if (s == "all" || s == "all-sensors") return PolicyKind::kAll;
  throw ParameterError("unknown policy '" + s + "'");
}

// Runs one selection policy on a single step problem.
inline SelectionResult select_sensors(const PolicySpec& policy, const Matrix& p_pred, StepRows rows, int K,
                                      Rng& rng) {
  switch (policy.kind) {
    case PolicyKind::kGreedy: return greedy_select(p_pred, rows, K);
    case PolicyKind::kRandomized:
      return randomized_greedy_select(p_pred, rows, K, SamplingConfig{policy.epsilon, policy.trace_gain_ratio},
                                      rng);
    case PolicyKind::kRandom: return random_select(p_pred, rows, K, rng);
    case PolicyKind::kExhaustive: return exhaustive_select(p_pred, rows, K);
    case PolicyKind::kAll: return all_select(p_pred, rows);
  }
  throw ParameterError("unknown policy");
}

struct StepRecord {
  int k = 0;
  IndexList selected;
  double f_value = 0.0;
  // Tr(P_{k|k}).
  double mse = 0.0;
  // Realized ||x_k - x_hat_{k|k}||^2.
  double sq_error = 0.0;
  double trace_p_pred = 0.0;
  std::int64_t gain_evals = 0;
  double select_time_s = 0.0;
  bool predict_only = false;
};

// Draws from N(0, cov) using a Cholesky factor, falling back to a
// symmetric square root for singular PSD covariances.
inline Matrix covariance_factor(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

inline Vector draw_gaussian(const Matrix& factor, Rng& rng) {
  Vector z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return factor * z;
}

// Ground truth of one trial: x_k and y_k for every step. World noise comes
// from substreams hash(trial_seed, "w"/"v", k) so that every policy sees
// the same world.
struct Trajectory {
  std::vector<Vector> x;
  std::vector<Vector> y;
};

inline Trajectory simulate_world(const ProblemInstance& inst, std::uint64_t trial_seed) {
  Trajectory world;
  Rng init(derive_seed(trial_seed, "x0"));
  Vector x = inst.mean0() + draw_gaussian(covariance_factor(inst.sigma_x), init);
  const Matrix q_factor = covariance_factor(inst.Q);
  for (int k = 0; k < inst.horizon; ++k) {
    Rng w_rng(derive_seed(trial_seed, "w", static_cast<std::uint64_t>(k)));
    Rng v_rng(derive_seed(trial_seed, "v", static_cast<std::uint64_t>(k)));
    x = inst.A(k) * x + draw_gaussian(q_factor, w_rng);
    Vector y = inst.rows(k) * x;
    for (int j = 0; j < inst.n; ++j) y(j) += std::sqrt(inst.r_diag(j)) * v_rng.normal();
    world.x.push_back(x);
    world.y.push_back(std::move(y));
  }
  return world;
}

// predict -> select -> update for every step of the horizon.
inline std::vector<StepRecord> run_filter(const ProblemInstance& inst, const Trajectory& world,
                                          const PolicySpec& policy, std::uint64_t trial_seed) {
  std::vector<StepRecord> records;
  records.reserve(static_cast<std::size_t>(inst.horizon));
  FilterState state{inst.mean0(), inst.sigma_x, -1};
  for (int k = 0; k < inst.horizon; ++k) {
    const Prediction pred = predict(state, inst.A(k), inst.Q);
    const StepRows rows(inst.rows(k), inst.r_diag);
    Rng rng(derive_seed(trial_seed, "select", static_cast<std::uint64_t>(k)));
    const SelectionResult sel = select_sensors(policy, pred.P_pred, rows, inst.K, rng);
    const UpdateResult upd = update(pred.x_pred, pred.P_pred, sel.selected, rows, world.y[static_cast<std::size_t>(k)], k);
    state = upd.state;

    StepRecord rec;
    rec.k = k;
    rec.selected = sel.selected;
    rec.trace_p_pred = pred.P_pred.trace();
    rec.mse = state.P_filt.trace();
    rec.f_value = rec.trace_p_pred - rec.mse;
    rec.sq_error = (world.x[static_cast<std::size_t>(k)] - state.x_hat).squaredNorm();
    rec.gain_evals = sel.gain_evals;
    rec.select_time_s = sel.wall_time;
    rec.predict_only = upd.predict_only;
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<StepRecord> run_filter(const ProblemInstance& inst, const PolicySpec& policy,
                                          std::uint64_t trial_seed) {
  return run_filter(inst, simulate_world(inst, trial_seed), policy, trial_seed);
}

// P_{k|k-1} at step k when steps 0..k-1 are scheduled greedily. This is the
// prior used when a single step of an instance file is scored on its own.
inline Matrix step_prior(const ProblemInstance& inst, int k) {
  if (k < 0 || k >= inst.horizon) throw ParameterError("step out of range");
  Matrix p = inst.sigma_x;
  for (int t = 0;; ++t) {
    Matrix pred = inst.A(t) * p * inst.A(t).transpose() + inst.Q;
    symmetrize(pred);
    if (t == k) return pred;
    const SelectionResult sel = greedy_select(pred, StepRows(inst.rows(t), inst.r_diag), inst.K);
    p = make_state(pred, StepRows(inst.rows(t), inst.r_diag), sel.selected).inverse_fisher();
  }
}

}  // namespace ksched
