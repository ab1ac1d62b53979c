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
// Shared linear-algebra aliases, error types and small numeric helpers.
//

#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksched {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Measurement matrices are stored row-major so each sensor row h_j is
// contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = int;
using IndexList = std::vector<Index>;

// Invalid numeric parameter (dimensions, variances, epsilon ranges, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse, e.g. adding a sensor that is already selected.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A value violates a model invariant (non-positive variance, asymmetric
// covariance, shape mismatch).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed instance / selection file. `field()` names the offending key.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field, const std::string& what)
      : std::runtime_error("field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Enumeration would exceed the configured work cap.
class CapExceededError : public std::runtime_error {
 public:
  CapExceededError(const std::string& what, double count)
      : std::runtime_error(what), count_(count) {}
  double count() const { return count_; }

 private:
  double count_;
};

// Corrupted numerical state (e.g. non-positive Sherman-Morrison denominator).
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void symmetrize(Matrix& a) { a = 0.5 * (a + a.transpose()).eval(); }

// Eigenvalues of the symmetric part of `a`, ascending.
inline Vector symmetric_eigenvalues(const Matrix& a) {
  Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

inline double lambda_min(const Matrix& a) { return symmetric_eigenvalues(a)(0); }
inline double lambda_max(const Matrix& a) {
  Vector ev = symmetric_eigenvalues(a);
  return ev(ev.size() - 1);
}

// Inverse of a symmetric positive-definite matrix via Cholesky. Throws
// ValidationError when the factorization fails.
inline Matrix spd_inverse(const Matrix& a, const char* what = "matrix") {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw ValidationError(std::string(what) + " is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  symmetrize(inv);
  return inv;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ksched
