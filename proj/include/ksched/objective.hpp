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
// MSE set function
//
//   f(S) = Tr(P_pred) - Tr(F_S^{-1}),   F_S = P_pred^{-1} + sum_{j in S} h_j h_j^T / sigma_j^2
//
// FisherState keeps F_S^{-1} directly and grows it with rank-one
// Sherman-Morrison updates, so neither a gain evaluation nor an insertion
// ever inverts a matrix. Both cost O(m^2).
//

#pragma once

#include "ksched/common.hpp"

#include <algorithm>
#include <string>

namespace ksched {

// Rows of one time step: H_k (n x m, row-major) and the per-sensor noise
// variances. Non-owning; the referenced data must outlive any state built on
// it.
struct StepRows {
  const RowMatrix* H = nullptr;
  const Vector* r_diag = nullptr;

  StepRows() = default;
  StepRows(const RowMatrix& h, const Vector& r) : H(&h), r_diag(&r) {
    if (h.rows() != r.size()) throw ValidationError("H_k row count must equal length of R_diag");
  }

  int n() const { return static_cast<int>(H->rows()); }
  int m() const { return static_cast<int>(H->cols()); }
  auto row(Index j) const { return H->row(j).transpose(); }
  double variance(Index j) const { return (*r_diag)(j); }
};

class FisherState {
 public:
  FisherState(const Matrix& p_pred, StepRows rows)
      : rows_(rows), p_pred_(p_pred), f_inv_(p_pred), trace_p_pred_(p_pred.trace()),
        in_set_(static_cast<std::size_t>(rows.n()), false) {
    if (p_pred.rows() != rows.m() || p_pred.cols() != rows.m()) {
      throw ValidationError("P_pred must be m x m with m = columns of H_k");
    }
    scratch_.resize(rows.m());
  }

  FisherState(const Matrix& p_pred, const RowMatrix& h, const Vector& r_diag)
      : FisherState(p_pred, StepRows(h, r_diag)) {}

  const IndexList& selected() const { return selected_; }
  const Matrix& inverse_fisher() const { return f_inv_; }
  const Matrix& p_pred() const { return p_pred_; }
  const StepRows& rows() const { return rows_; }
  int n() const { return rows_.n(); }
  int m() const { return rows_.m(); }
  bool contains(Index j) const { return in_set_[static_cast<std::size_t>(j)]; }

  // f(S). Zero for the empty selection.
  double value() const {
    if (selected_.empty()) return 0.0;
    return trace_p_pred_ - f_inv_.trace();
  }

  // Tr(F_S^{-1}), the filtered MSE.
  double mse() const { return f_inv_.trace(); }

  // f_j(S) = h^T F^{-2} h / (sigma_j^2 + h^T F^{-1} h), evaluated with one
  // product v = F^{-1} h as (v^T v) / (sigma_j^2 + h^T v).
  double gain(Index j) const {
    Vector v(m());
    return gain_into(j, v);
  }

  // Same as gain() with a caller-owned workspace of length m; lets a scan
  // over candidates run without allocating.
  double gain_into(Index j, Vector& v) const {
    check_index(j);
    if (contains(j)) throw UsageError("sensor " + std::to_string(j) + " is already selected");
    const auto h = rows_.row(j);
    v.noalias() = f_inv_ * h;
    const double denom = rows_.variance(j) + h.dot(v);
    if (!(denom > 0.0)) throw InternalError("non-positive Sherman-Morrison denominator");
    return v.squaredNorm() / denom;
  }

  // F^{-1} <- F^{-1} - (F^{-1} h)(F^{-1} h)^T / (sigma_j^2 + h^T F^{-1} h),
  // followed by symmetrization.
  void add(Index j) {
    check_index(j);
    if (contains(j)) throw UsageError("sensor " + std::to_string(j) + " is already selected");
    const auto h = rows_.row(j);
    scratch_.noalias() = f_inv_ * h;
    const double denom = rows_.variance(j) + h.dot(scratch_);
    if (!(denom > 0.0)) throw InternalError("non-positive Sherman-Morrison denominator");
    f_inv_.noalias() -= (scratch_ / denom) * scratch_.transpose();
    symmetrize(f_inv_);
    selected_.push_back(j);
    in_set_[static_cast<std::size_t>(j)] = true;
  }

 private:
  void check_index(Index j) const {
    if (j < 0 || j >= n()) throw UsageError("sensor index " + std::to_string(j) + " out of range");
  }

  StepRows rows_;
  Matrix p_pred_;
  Matrix f_inv_;
  double trace_p_pred_;
  IndexList selected_;
  std::vector<bool> in_set_;
  Vector scratch_;
};

inline double f_value(const FisherState& state) { return state.value(); }

inline double marginal_gain(const FisherState& state, Index j) { return state.gain(j); }

inline FisherState add_sensor(FisherState state, Index j) {
  state.add(j);
  return state;
}

// Builds the state for a given selection, inserting in the listed order.
inline FisherState make_state(const Matrix& p_pred, StepRows rows, const IndexList& selection) {
  FisherState state(p_pred, rows);
  for (Index j : selection) state.add(j);
  return state;
}

}  // namespace ksched
